#include "islab/cli.hpp"

int main(int argc, char** argv) { return islab::cli::main_entry(argc, argv); }
