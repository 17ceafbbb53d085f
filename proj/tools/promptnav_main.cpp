#include "promptnav/cli.hpp"

int main(int argc, char** argv) { return promptnav::cli::run(argc, argv); }
