#include "stgcast/cli.hpp"

int main(int argc, char** argv) { return stgcast::cli::run(argc, argv); }
