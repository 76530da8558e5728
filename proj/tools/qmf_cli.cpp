#include "qmf/commands.hpp"

int main(int argc, char** argv) { return qmf::run_command(argc, argv); }
