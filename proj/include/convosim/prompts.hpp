#pragma once

// Builtin persona library: the five frozen system prompts (four parenting
// styles plus the child agent) and few-shot prompt augmentation. The builtin
// texts are pinned byte-for-byte by golden tests, spelling quirks included;
// do not edit them here.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convosim/domain.hpp"

namespace convosim {

namespace prompts {

inline constexpr const char* kAuthoritarian =
    R"__(Your'll act as an authoritarian parent. You will prioritize the establishment of firm limits and controls over the child, with a strong emphasis on obedience and adherence to rules without the need for explanation or verbal exchange. Your communication style is primarily one-way, from parent to child, underscoring the non-negotiable nature of the rules you set. You'll insist on strict adherence to rules, and any deviation by the child is met with a clear indication of disapproval or punishment. Your responses contain no negotiation or compromise. You prefer less nurturing and have high expectations with limited flexibility. Always use language like daily-life conversations. Always respond as the parent, and do not repeat anything about your objectives.)__";

inline constexpr const char* kAuthoritative =
    R"__(You'll act as an authoritative parent. Give responses that reflect clear guidelines, warmth, support, and constructive feedback. You encourage independent thinking within set boundaries and promotes a positive, nurturing dialogue. You'll give your child clear guidelines for your expectations and explain reasons associated with disciplinary actions. Use disciplinary methods as a form of support rather than punishment. Frame corrections and advice in a positive light, focusing on how to improve or handle situations better in the future. You ask your child to think independently and make decisions within the limits and controls set. Ask open-ended questions to facilitate this process. Encourage extensive verbal exchange. Allow your child to express thoughts and feelings, and respond with empathy, warmth, and understanding. Always use language like daily-life conversations. Always respond as the parent, and do not repeat anything about your objectives.)__";

inline constexpr const char* kPermissive =
    R"__(You'll act as a permissive parent. You are warm, nurturing and usually have minimal or no expectations. You impose limited rules on your children. Communication with your child remains open, but you allow your child to figure things out for themselves. You have low expectation and rarely use discipline. You act more like friends than parents. Always use language like daily-life conversations. Always respond as the parent, and do not repeat anything about your objectives.)__";

inline constexpr const char* kUninvolved =
    R"__(You'll act as an uninvolved parent. You give a lot of freedom to your child, and normally stays out of the way. You'll fulfill the child's basic needs while generally remaining detached from your child's life. You'll not utilize a particular disciplining style. You maintain a limited amount of communication with your child. You'll offer a low amount of nurturing while having either few or no expectations of your child. Always use language like daily-life conversations. Always respond as the parent, and do not repeat anything about your objectives.)__";

inline constexpr const char* kChild =
    R"__(Your'll act as a child. You are talking to your parent about something in your daily life. You can ask questions, request something, or just do some casual talks.  Always use language like daily-life conversations. Always respond as the child, and do not repeat anything about your objectives.)__";

}  // namespace prompts

inline constexpr std::string_view kFewShotHeader =
    "\n\nHere are example exchanges:\n";

inline std::string render_example(const ExampleExchange& e) {
    return "Child: " + e.child_line + "\nParent: " + e.parent_line;
}

// Returns a new profile whose system prompt is the original text followed by
// the worked examples. The input profile is left untouched, and its prompt is
// always a prefix of the result.
inline PersonaProfile apply_few_shot(
    const PersonaProfile& persona,
    const std::vector<ExampleExchange>& examples) {
    if (persona.role != Role::Parent)
        throw std::invalid_argument(
            "apply_few_shot: persona role must be parent");
    if (examples.empty())
        throw std::invalid_argument("apply_few_shot: examples must be non-empty");
    for (const auto& e : examples)
        if (e.child_line.empty() || e.parent_line.empty())
            throw std::invalid_argument(
                "apply_few_shot: example lines must be non-empty");
    PersonaProfile augmented = persona;
    augmented.system_prompt += kFewShotHeader;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (i > 0) augmented.system_prompt.push_back('\n');
        augmented.system_prompt += render_example(examples[i]);
    }
    augmented.few_shot_examples = examples;
    return augmented;
}

inline PersonaProfile builtin_persona(Style style) {
    switch (style) {
        case Style::Authoritarian:
            return {Role::Parent, style, prompts::kAuthoritarian, {}};
        case Style::Authoritative:
            return {Role::Parent, style, prompts::kAuthoritative, {}};
        case Style::Permissive:
            return {Role::Parent, style, prompts::kPermissive, {}};
        case Style::Uninvolved:
            return {Role::Parent, style, prompts::kUninvolved, {}};
        case Style::Child:
            return {Role::Child, style, prompts::kChild, {}};
        case Style::Custom:
            break;
    }
    throw std::invalid_argument("no builtin persona for style custom");
}

// Few-shot example files are repeated pairs of "child:" / "parent:" prefixed
// lines. Blank lines and lines starting with '#' are ignored.
inline std::vector<ExampleExchange> parse_example_exchanges(
    const std::string& text) {
    std::vector<ExampleExchange> exchanges;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool expecting_parent = false;
    ExampleExchange current;
    auto strip = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        return begin == std::string::npos ? std::string()
                                          : s.substr(begin, end - begin + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = strip(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::string wanted = expecting_parent ? "parent:" : "child:";
        if (stripped.rfind(wanted, 0) != 0)
            throw std::runtime_error("example file line " +
                                     std::to_string(line_no) + ": expected '" +
                                     wanted + "' prefix");
        const std::string value = strip(stripped.substr(wanted.size()));
        if (value.empty())
            throw std::runtime_error("example file line " +
                                     std::to_string(line_no) +
                                     ": empty example line");
        if (expecting_parent) {
            current.parent_line = value;
            exchanges.push_back(current);
        } else {
            current.child_line = value;
        }
        expecting_parent = !expecting_parent;
    }
    if (expecting_parent)
        throw std::runtime_error(
            "example file ends with an unpaired child line");
    return exchanges;
}

inline std::vector<ExampleExchange> load_example_file(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_example_exchanges(buffer.str());
}

// Immutable after load; freely shared across threads.
class PersonaCatalog {
public:
    PersonaCatalog() {
        for (Style s : {Style::Authoritarian, Style::Authoritative,
                        Style::Permissive, Style::Uninvolved, Style::Child})
            builtin_.emplace(s, builtin_persona(s));
    }

    const PersonaProfile& get(Style style) const {
        const auto it = builtin_.find(style);
        if (it == builtin_.end())
            throw std::invalid_argument(std::string("unknown builtin style: ") +
                                        to_string(style));
        return it->second;
    }

    // Resolves builtin style names first, then user-defined persona names.
    const PersonaProfile& get(const std::string& name) const {
        if (const auto it = user_.find(name); it != user_.end())
            return it->second;
        try {
            return get(parse_style(name));
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("unknown persona: " + name);
        }
    }

    void add_user(const std::string& name, PersonaProfile profile) {
        if (name.empty())
            throw std::invalid_argument("persona name must be non-empty");
        if (profile.system_prompt.empty())
            throw std::invalid_argument("persona '" + name +
                                        "' has an empty prompt");
        user_[name] = std::move(profile);
    }

    const std::map<Style, PersonaProfile>& builtin() const { return builtin_; }
    const std::map<std::string, PersonaProfile>& user_defined() const {
        return user_;
    }

    // Loads user personas from a plain-text definition file; example paths
    // are resolved relative to the file's directory and applied immediately.
    void load_user_file(const std::filesystem::path& path);

private:
    std::map<Style, PersonaProfile> builtin_;
    std::map<std::string, PersonaProfile> user_;
};

// Persona definition files hold one or more blocks:
//
//   [persona]
//   name = homework-coach
//   role = parent
//   prompt = You'll act as ...\nSecond paragraph.
//   style = custom          (optional, defaults to custom)
//   examples = pairs.txt    (optional, parent role only)
//
// Values are single lines; "\n" escapes embed newlines in prompts.
inline std::vector<std::pair<std::string, PersonaProfile>> parse_persona_file(
    const std::string& text, const std::filesystem::path& base_dir) {
    auto strip = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        return begin == std::string::npos ? std::string()
                                          : s.substr(begin, end - begin + 1);
    };
    auto unescape = [](const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) {
                if (s[i + 1] == 'n') {
                    out.push_back('\n');
                    ++i;
                    continue;
                }
                if (s[i + 1] == '\\') {
                    out.push_back('\\');
                    ++i;
                    continue;
                }
            }
            out.push_back(s[i]);
        }
        return out;
    };

    std::vector<std::pair<std::string, PersonaProfile>> personas;
    std::map<std::string, std::string> fields;
    bool in_block = false;

    auto finish_block = [&]() {
        if (!in_block) return;
        const auto name_it = fields.find("name");
        const auto role_it = fields.find("role");
        const auto prompt_it = fields.find("prompt");
        if (name_it == fields.end() || role_it == fields.end() ||
            prompt_it == fields.end())
            throw std::runtime_error(
                "persona block needs name, role, and prompt fields");
        PersonaProfile profile;
        profile.role = parse_role(role_it->second);
        profile.style = fields.count("style")
                            ? parse_style(fields.at("style"))
                            : Style::Custom;
        profile.system_prompt = unescape(prompt_it->second);
        if (const auto ex = fields.find("examples"); ex != fields.end()) {
            const auto examples =
                load_example_file(base_dir / ex->second);
            profile = apply_few_shot(profile, examples);
        }
        personas.emplace_back(name_it->second, std::move(profile));
        fields.clear();
        in_block = false;
    };

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = strip(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        if (stripped == "[persona]") {
            finish_block();
            in_block = true;
            continue;
        }
        const auto eq = stripped.find('=');
        if (!in_block || eq == std::string::npos)
            throw std::runtime_error("persona file line " +
                                     std::to_string(line_no) +
                                     ": expected 'key = value' inside a "
                                     "[persona] block");
        fields[strip(stripped.substr(0, eq))] =
            strip(stripped.substr(eq + 1));
    }
    finish_block();
    return personas;
}

inline void PersonaCatalog::load_user_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    for (auto& [name, profile] :
         parse_persona_file(buffer.str(), path.parent_path()))
        add_user(name, std::move(profile));
}

}  // namespace convosim
