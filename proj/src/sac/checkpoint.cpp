#include "fedhvac/sac/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fedhvac::sac {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'F', 'H', 'V', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void pod(const T& v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void f64s(const std::vector<double>& v) {
    pod<std::uint64_t>(v.size());
    if (!v.empty()) out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void u64s(const std::vector<std::size_t>& v) {
    pod<std::uint64_t>(v.size());
    for (auto x : v) pod<std::uint64_t>(x);
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> f64s() {
    const auto n = pod<std::uint64_t>();
    if (n > (in_.size() - pos_) / sizeof(double)) throw CheckpointError("checkpoint truncated");
    std::vector<double> v(n);
    if (n) std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::vector<std::size_t> u64s() {
    const auto n = pod<std::uint64_t>();
    if (n > (in_.size() - pos_) / sizeof(std::uint64_t)) throw CheckpointError("checkpoint truncated");
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = pod<std::uint64_t>();
    return v;
  }
  void expect(const char* p, std::size_t n) {
    need(n);
    if (std::memcmp(in_.data() + pos_, p, n) != 0) throw CheckpointError("not a checkpoint file (bad magic)");
    pos_ += n;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_rms(Writer& w, const RunningMeanStd& r) {
  w.f64s(r.mean);
  w.f64s(r.var);
  w.pod(r.count);
}

RunningMeanStd read_rms(Reader& r) {
  RunningMeanStd s;
  s.mean = r.f64s();
  s.var = r.f64s();
  s.count = r.pod<double>();
  if (s.mean.size() != s.var.size()) throw CheckpointError("normalizer statistics mismatch");
  return s;
}

}  // namespace

Checkpoint make_checkpoint(const SacAgent& agent, const RunningNormalizer& normalizer) {
  Checkpoint c;
  c.config = agent.config;
  c.actor = agent.actor;
  c.critic1 = agent.critic1;
  c.critic2 = agent.critic2;
  c.target1 = agent.target1;
  c.target2 = agent.target2;
  c.log_alpha = agent.log_alpha;
  c.normalizer = normalizer;
  c.normalizer.training = true;
  c.gradient_steps = agent.gradient_steps;
  return c;
}

SacAgent restore_agent(const Checkpoint& ckpt, std::uint64_t seed) {
  SacAgent a = SacAgent::create(ckpt.config, seed);
  if (ckpt.actor.size() != a.actor.size() || ckpt.critic1.size() != a.critic1.size() ||
      ckpt.critic2.size() != a.critic2.size() || ckpt.target1.size() != a.target1.size() ||
      ckpt.target2.size() != a.target2.size()) {
    throw CheckpointError("checkpoint networks do not match their recorded shapes");
  }
  a.actor = ckpt.actor;
  a.critic1 = ckpt.critic1;
  a.critic2 = ckpt.critic2;
  a.target1 = ckpt.target1;
  a.target2 = ckpt.target2;
  a.log_alpha = ckpt.log_alpha;
  a.gradient_steps = ckpt.gradient_steps;
  return a;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.pod<std::uint64_t>(c.config.obs_dim);
  w.f64s(c.config.action_box.low);
  w.f64s(c.config.action_box.high);
  w.u64s(c.config.hidden);
  w.pod(c.config.gamma);
  w.pod(c.config.polyak);
  w.pod(c.config.log_std_min);
  w.pod(c.config.log_std_max);
  w.pod(c.log_alpha);
  w.pod(c.config.target_entropy.value_or(-static_cast<double>(c.config.action_box.size())));
  for (const auto* p : {&c.actor, &c.critic1, &c.critic2, &c.target1, &c.target2}) w.f64s(p->values());
  write_rms(w, c.normalizer.obs_rms);
  write_rms(w, c.normalizer.ret_rms);
  w.pod(c.normalizer.returns);
  w.pod(c.normalizer.gamma);
  w.pod(c.normalizer.clip_obs);
  w.pod(c.normalizer.clip_reward);
  w.pod(c.normalizer.epsilon);
  w.pod(c.gradient_steps);
  w.pod(c.env_steps);
  w.pod(c.episode);
  w.pod(c.round);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.expect(kMagic, sizeof(kMagic));
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.config.obs_dim = r.pod<std::uint64_t>();
  c.config.action_box.low = r.f64s();
  c.config.action_box.high = r.f64s();
  c.config.hidden = r.u64s();
  c.config.gamma = r.pod<double>();
  c.config.polyak = r.pod<double>();
  c.config.log_std_min = r.pod<double>();
  c.config.log_std_max = r.pod<double>();
  c.log_alpha = r.pod<double>();
  c.config.target_entropy = r.pod<double>();
  for (auto* p : {&c.actor, &c.critic1, &c.critic2, &c.target1, &c.target2}) *p = nn::ParamVector(r.f64s());
  c.normalizer.obs_rms = read_rms(r);
  c.normalizer.ret_rms = read_rms(r);
  c.normalizer.returns = r.pod<double>();
  c.normalizer.gamma = r.pod<double>();
  c.normalizer.clip_obs = r.pod<double>();
  c.normalizer.clip_reward = r.pod<double>();
  c.normalizer.epsilon = r.pod<double>();
  c.gradient_steps = r.pod<std::uint64_t>();
  c.env_steps = r.pod<std::uint64_t>();
  c.episode = r.pod<std::uint64_t>();
  c.round = r.pod<std::uint64_t>();
  if (!r.at_end()) throw CheckpointError("trailing bytes after checkpoint payload");
  try {
    c.config.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }
  if (c.normalizer.obs_dim() != c.config.obs_dim) throw CheckpointError("normalizer dimension mismatch");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_checkpoint(ckpt);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace fedhvac::sac
