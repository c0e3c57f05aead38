#include "smolcircle/harness.hpp"

int main(int argc, char** argv) { return smolcircle::run_cli(argc, argv); }
