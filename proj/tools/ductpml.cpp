#include "ductpml/cli.hpp"

int main(int argc, char** argv) { return ductpml::run_cli(argc, argv); }
