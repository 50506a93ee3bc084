#include "daycare/cli.hpp"

int main(int argc, char** argv) { return daycare::cli::parse_and_dispatch(argc, argv); }
