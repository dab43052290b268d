#include "dbaug/cli/cli.hpp"

int main(int argc, char** argv) { return dbaug::cli::run(argc, argv); }
