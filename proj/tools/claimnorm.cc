#include "claimnorm/cli.h"

int main(int argc, char** argv) { return claimnorm::cli::run_cli(argc, argv); }
