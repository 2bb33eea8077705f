#include "selfqa/cli.hpp"

int main(int argc, char** argv) { return selfqa::run_cli(argc, argv); }
