#include "biaslens/classify.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "biaslens/text.hpp"

namespace biaslens {
namespace {

using ordered_json = nlohmann::ordered_json;

}  // namespace

void Lexicon::validate() const {
  std::vector<std::string> findings;
  auto cores = [](const std::vector<std::string>& forms) {
    std::set<std::string> out;
    for (const auto& f : forms) {
      const auto core = text::normalize_text(f);
      if (!core.empty()) out.insert(core);
    }
    return out;
  };
  const auto affirm = cores(affirm_forms);
  const auto negate = cores(negate_forms);
  const auto neutral = cores(neutral_forms);
  if (affirm.empty()) findings.push_back("lexicon has no affirm forms");
  if (negate.empty()) findings.push_back("lexicon has no negate forms");
  for (const auto& core : affirm) {
    if (negate.count(core)) {
      findings.push_back("form '" + core + "' is both affirm and negate");
    }
    if (neutral.count(core)) {
      findings.push_back("form '" + core + "' is both affirm and neutral");
    }
  }
  for (const auto& core : negate) {
    if (neutral.count(core)) {
      findings.push_back("form '" + core + "' is both negate and neutral");
    }
  }
  if (!findings.empty()) throw ValidationError(std::move(findings));
}

Lexicon default_lexicon(const std::string& language) {
  Lexicon lex;
  lex.language = language;
  if (language == "en") {
    lex.affirm_forms = {"yes"};
    lex.negate_forms = {"no"};
    lex.neutral_forms = {"neither", "neutral", "i don't know"};
  } else if (language == "ja") {
    lex.affirm_forms = {"はい"};
    lex.negate_forms = {"いいえ"};
    lex.neutral_forms = {"どちらともいえない", "どちらでもない", "中立"};
  } else if (language == "es") {
    lex.affirm_forms = {"sí", "si"};
    lex.negate_forms = {"no"};
    lex.neutral_forms = {"neutral", "ninguno"};
  } else if (language == "fr") {
    lex.affirm_forms = {"oui"};
    lex.negate_forms = {"non"};
    lex.neutral_forms = {"neutre", "ni l'un ni l'autre"};
  } else {
    throw ConfigError("no built-in lexicon for language '" + language +
                      "'; provide a lexicon file");
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open lexicon: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ordered_json doc;
  try {
    doc = ordered_json::parse(buf.str());
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("lexicon is not valid JSON: ") + ex.what());
  }
  try {
    Lexicon lex;
    lex.language = doc.at("language").get<std::string>();
    for (const auto& f : doc.at("affirm")) lex.affirm_forms.push_back(f.get<std::string>());
    for (const auto& f : doc.at("negate")) lex.negate_forms.push_back(f.get<std::string>());
    if (doc.contains("neutral")) {
      for (const auto& f : doc.at("neutral")) lex.neutral_forms.push_back(f.get<std::string>());
    }
    lex.validate();
    return lex;
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("lexicon JSON has unexpected shape: ") + ex.what());
  }
}

Classifier::Classifier(Lexicon lexicon, ClassifyMode mode)
    : lexicon_(std::move(lexicon)), mode_(mode) {
  lexicon_.validate();
  auto add = [this](const std::vector<std::string>& forms, Category category) {
    auto& target = category == Category::kNeutral ? neutral_forms_ : stance_forms_;
    for (const auto& f : forms) {
      const auto core = text::normalize_text(f);
      if (core.empty()) continue;
      target.push_back(Form{f, core, category});
    }
  };
  add(lexicon_.affirm_forms, Category::kAffirm);
  add(lexicon_.negate_forms, Category::kNegate);
  add(lexicon_.neutral_forms, Category::kNeutral);
  // Longest core first makes prefix matching unambiguous.
  std::stable_sort(stance_forms_.begin(), stance_forms_.end(),
                   [](const Form& a, const Form& b) {
                     return a.core.size() > b.core.size();
                   });
}

Classification Classifier::operator()(std::string_view raw) const {
  const auto folded = text::fold_text(raw);
  const auto stripped = text::normalize_text(raw);

  for (const auto& form : stance_forms_) {
    if (stripped == form.core) {
      return Classification{form.category, answer_value(form.category),
                            form.original, /*verbose=*/false};
    }
  }
  for (const auto& form : stance_forms_) {
    if (text::starts_with_boundary(folded, form.core)) {
      if (mode_ == ClassifyMode::kStrict) {
        // Strict scoring treats anything beyond the bare token as unexpected.
        return Classification{Category::kExplainer, 0, form.original, /*verbose=*/true};
      }
      return Classification{form.category, answer_value(form.category),
                            form.original, /*verbose=*/true};
    }
  }
  for (const auto& form : neutral_forms_) {
    if (stripped == form.core) {
      return Classification{Category::kNeutral, 0, form.original, /*verbose=*/false};
    }
  }
  return Classification{Category::kExplainer, 0, std::nullopt,
                        /*verbose=*/!stripped.empty()};
}

Classification classify(std::string_view raw, const Lexicon& lexicon,
                        ClassifyMode mode) {
  return Classifier(lexicon, mode)(raw);
}

UnexpectedCounts tally_unexpected(std::span<const Classification> classifications) {
  UnexpectedCounts counts;
  counts.total = classifications.size();
  for (const auto& c : classifications) {
    if (c.category == Category::kExplainer) ++counts.explainer;
    else if (c.category == Category::kNeutral) ++counts.neutral;
  }
  return counts;
}

}  // namespace biaslens
