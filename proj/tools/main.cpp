#include "trajcv/cli/commands.hpp"

int main(int argc, char** argv) { return trajcv::cli::run_cli(argc, argv); }
