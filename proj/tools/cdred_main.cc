#include "cdred/cli/commands.h"

int main(int argc, char** argv) { return cdred::cli::run(argc, argv); }
