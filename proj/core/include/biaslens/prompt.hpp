#pragma once

#include <filesystem>
#include <string>

#include "biaslens/bank.hpp"
#include "biaslens/types.hpp"

namespace biaslens {

// Surface form of one phase's prompt in one language. The pattern carries a
// {question} placeholder; opposing patterns additionally carry {opinion},
// which receives the affirm or negate token verbatim.
struct PromptTemplate {
  std::string language;
  Phase phase = Phase::kInitial;
  std::string pattern;
  std::string affirm_token;
  std::string negate_token;
  std::string version;

  void validate() const;
};

// Built-in templates for en, ja, es, fr. The non-English wordings are
// structural translations of the English form and can be overridden from a
// template file.
PromptTemplate default_template(const std::string& language, Phase phase);

PromptTemplate load_template(const std::filesystem::path& path);
std::string template_to_json_text(const PromptTemplate& tmpl);

std::string render_initial(const Question& question, const PromptTemplate& tmpl);
std::string render_opposing(const Question& question, const PromptTemplate& tmpl,
                            Stance stance);

// The injected opinion contradicts the phase-1 leaning; a dead-even bias
// defaults to the negating stance.
Stance derive_opposing(double bias_initial);

}  // namespace biaslens
