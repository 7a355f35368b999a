#include "ateaudit/cli.hpp"

int main(int argc, char** argv) { return ateaudit::run_cli(argc, argv); }
