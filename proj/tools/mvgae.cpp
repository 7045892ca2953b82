#include "mvgae/cli.hpp"

int main(int argc, char** argv) { return mvgae::run_cli(argc, argv); }
