#include "pic/cli.hpp"

int main(int argc, char** argv) { return pic::cli::main_entry(argc, argv); }
