#include "site/cli.hpp"

int main(int argc, char** argv) { return site::cli_main(argc, argv); }
