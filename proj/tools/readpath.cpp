#include "readpath/cli.hpp"

int main(int argc, char** argv) { return readpath::cli::run(argc, argv); }
