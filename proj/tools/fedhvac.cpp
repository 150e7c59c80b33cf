#include "fedhvac/cli/app.hpp"

int main(int argc, char** argv) { return fedhvac::cli::run_command(argc, argv); }
