#include "commands.hpp"

int main(int argc, char** argv) { return invdp::cli::run(argc, argv); }
