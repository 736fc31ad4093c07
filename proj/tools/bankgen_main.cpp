// bankgen: writes a deterministic synthetic question bank. The content is
// placeholder text for pipeline exercise and demos; real batteries are
// authored externally and ingested as JSON or CSV.

#include <iostream>

#include <CLI11.hpp>

#include "biaslens/bank_synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic question bank"};
  biaslens::SyntheticBankSpec spec;
  std::string out_path = "synthetic_bank.json";
  app.add_option("--out", out_path, "Output bank JSON path");
  app.add_option("--name", spec.name, "Bank name");
  app.add_option("--base-questions", spec.base_questions, "Base question count");
  app.add_option("--split-pairs", spec.split_pairs,
                 "How many base questions are split into pairs");
  app.add_option("--delegable", spec.delegable_base,
                 "Base questions tagged delegable-task (the rest are debate)");
  app.add_option("--languages", spec.languages, "Language codes");
  app.add_option("--seed", spec.seed, "Layout seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto bank = biaslens::synthetic_bank(spec);
    bank.save(out_path);
    std::cout << out_path << ": " << bank.questions().size() << " questions, "
              << bank.split_pair_count() << " pairs, "
              << bank.merged_numbering().size() << " merged slots\n";
  } catch (const biaslens::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
