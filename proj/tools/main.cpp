#include "steersim/experiment.hpp"

int main(int argc, char** argv)
{
    return steersim::experiment::cli_main(argc, argv);
}
