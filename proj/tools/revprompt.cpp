#include "revprompt/app.hpp"

int main(int argc, char** argv) { return revprompt::app::run_cli(argc, argv); }
