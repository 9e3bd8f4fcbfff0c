// Candidate worker: one handshake line out, one job line in, one report line out.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "promptfwa/native_candidate.hpp"

using namespace promptfwa;

int main(int argc, char** argv) {
    CLI::App app{"Runs one candidate job read from stdin"};
    int proto = runner::kProtocolVersion;
    std::vector<std::string> problems{"airland", "flowshop", "pmedian", "epp"};
    app.add_option("--proto", proto, "Protocol version to announce");
    app.add_option("--problems", problems, "Problems to announce");
    CLI11_PARSE(app, argc, argv);

    runner::Handshake hs{proto, problems};
    std::cout << runner::to_json(hs).dump() << std::endl;

    std::string line;
    if (!std::getline(std::cin, line)) return 0;
    runner::EvalJob job;
    try {
        job = runner::eval_job_from_json(runner::json::parse(line));
    } catch (const std::exception& e) {
        std::cerr << "bad job: " << e.what() << '\n';
        return 2;
    }
    std::cout << runner::to_json(native::run_job(job)).dump() << std::endl;
    return 0;
}
