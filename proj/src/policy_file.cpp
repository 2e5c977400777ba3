#include "pda/policy_file.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace pda {

namespace {

void check_writable_string(const std::string& s, const char* what) {
    for (char c : s)
        if (c == '"' || c == '\\' || c == '\n' || c == '\r')
            throw PolicyFileError(std::string(what) + " contains a character the policy file"
                                                      " format cannot represent");
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

struct Value {
    enum class Kind { Str, Int, Bool, StrArray } kind;
    std::string str;
    std::int64_t integer = 0;
    bool boolean = false;
    std::vector<std::string> array;
};

Value parse_value(const std::string& raw, int line_no) {
    auto bad = [&](const char* why) {
        throw PolicyFileError("line " + std::to_string(line_no) + ": " + why);
    };
    Value v{};
    if (raw.empty()) bad("empty value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') bad("unterminated string");
        v.kind = Value::Kind::Str;
        v.str = raw.substr(1, raw.size() - 2);
        if (v.str.find('"') != std::string::npos) bad("embedded quote in string");
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = Value::Kind::Bool;
        v.boolean = raw == "true";
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') bad("unterminated array");
        v.kind = Value::Kind::StrArray;
        std::string inner = trim(std::string_view(raw).substr(1, raw.size() - 2));
        while (!inner.empty()) {
            if (inner.front() != '"') bad("array elements must be strings");
            auto close = inner.find('"', 1);
            if (close == std::string::npos) bad("unterminated string in array");
            v.array.push_back(inner.substr(1, close - 1));
            inner = trim(std::string_view(inner).substr(close + 1));
            if (!inner.empty()) {
                if (inner.front() != ',') bad("expected comma between array elements");
                inner = trim(std::string_view(inner).substr(1));
            }
        }
        return v;
    }
    std::size_t pos = 0;
    try {
        v.integer = std::stoll(raw, &pos);
    } catch (const std::exception&) {
        bad("unrecognized value");
    }
    if (pos != raw.size()) bad("trailing characters after integer");
    v.kind = Value::Kind::Int;
    return v;
}

}  // namespace

std::string policy_to_text(const AccessPolicy& policy) {
    check_writable_string(policy.owner_did, "owner did");
    std::ostringstream out;
    out << "owner = " << quoted(policy.owner_did) << "\n";
    out << "revision = " << policy.revision << "\n";
    for (const Grant& g : policy.grants) {
        check_writable_string(g.sp_did, "grant sp did");
        check_writable_string(g.source_id, "grant source id");
        out << "\n[[grant]]\n";
        out << "sp = " << quoted(g.sp_did) << "\n";
        out << "source = " << quoted(g.source_id) << "\n";
        out << "operation = " << quoted(to_string(g.operation)) << "\n";
        out << "granted_at_ms = " << g.granted_at_ms << "\n";
        if (g.expires_at_ms) out << "expires_at_ms = " << *g.expires_at_ms << "\n";
    }
    for (const auto& [source_id, cp] : policy.policies) {
        check_writable_string(source_id, "policy source id");
        out << "\n[policy." << quoted(source_id) << "]\n";
        out << "functions = [";
        bool first = true;
        for (const std::string& fn : cp.allowed_function_ids) {
            check_writable_string(fn, "function id");
            out << (first ? "" : ", ") << quoted(fn);
            first = false;
        }
        out << "]\n";
        out << "max_records = " << cp.max_records << "\n";
        out << "max_requests_per_day = " << cp.max_requests_per_day << "\n";
        out << "require_enclave = " << (cp.require_enclave ? "true" : "false") << "\n";
    }
    return out.str();
}

AccessPolicy policy_from_text(const std::string& text) {
    AccessPolicy policy;
    enum class Section { Top, Grant, Policy } section = Section::Top;
    std::string policy_source;

    std::istringstream in(text);
    std::string raw_line;
    int line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        auto bad = [&](const std::string& why) {
            throw PolicyFileError("line " + std::to_string(line_no) + ": " + why);
        };
        std::string line = raw_line;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            // a # inside a quoted string is content, not a comment
            bool in_str = false;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') in_str = !in_str;
                if (line[i] == '#' && !in_str) {
                    line = line.substr(0, i);
                    break;
                }
            }
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line == "[[grant]]") {
            policy.grants.emplace_back();
            section = Section::Grant;
            continue;
        }
        if (line.starts_with("[policy.")) {
            if (!line.ends_with("]")) bad("unterminated table header");
            std::string name = trim(std::string_view(line).substr(8, line.size() - 9));
            if (name.size() >= 2 && name.front() == '"' && name.back() == '"')
                name = name.substr(1, name.size() - 2);
            if (name.empty()) bad("empty policy source id");
            if (policy.policies.contains(name)) bad("duplicate policy table: " + name);
            policy.policies[name];  // default-construct, fields fill below
            policy_source = name;
            section = Section::Policy;
            continue;
        }
        if (line.front() == '[') bad("unknown table header: " + line);

        auto eq = line.find('=');
        if (eq == std::string::npos) bad("expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        Value value = parse_value(trim(std::string_view(line).substr(eq + 1)), line_no);

        auto want = [&](Value::Kind kind, const char* desc) {
            if (value.kind != kind) bad("field " + key + " must be " + desc);
        };

        if (section == Section::Top) {
            if (key == "owner") {
                want(Value::Kind::Str, "a string");
                policy.owner_did = value.str;
            } else if (key == "revision") {
                want(Value::Kind::Int, "an integer");
                if (value.integer < 0) bad("revision must be nonnegative");
                policy.revision = static_cast<std::uint64_t>(value.integer);
            } else {
                bad("unknown top-level key: " + key);
            }
        } else if (section == Section::Grant) {
            Grant& g = policy.grants.back();
            if (key == "sp") {
                want(Value::Kind::Str, "a string");
                g.sp_did = value.str;
            } else if (key == "source") {
                want(Value::Kind::Str, "a string");
                g.source_id = value.str;
            } else if (key == "operation") {
                want(Value::Kind::Str, "a string");
                auto op = operation_from_string(value.str);
                if (!op) bad("unknown operation: " + value.str);
                g.operation = *op;
            } else if (key == "granted_at_ms") {
                want(Value::Kind::Int, "an integer");
                g.granted_at_ms = value.integer;
            } else if (key == "expires_at_ms") {
                want(Value::Kind::Int, "an integer");
                g.expires_at_ms = value.integer;
            } else {
                bad("unknown grant key: " + key);
            }
        } else {
            ComputationPolicy& cp = policy.policies.at(policy_source);
            if (key == "functions") {
                want(Value::Kind::StrArray, "a string array");
                cp.allowed_function_ids.clear();
                for (const std::string& fn : value.array) cp.allowed_function_ids.insert(fn);
            } else if (key == "max_records") {
                want(Value::Kind::Int, "an integer");
                if (value.integer < 1) bad("max_records must be >= 1");
                cp.max_records = static_cast<std::uint64_t>(value.integer);
            } else if (key == "max_requests_per_day") {
                want(Value::Kind::Int, "an integer");
                if (value.integer < 1) bad("max_requests_per_day must be >= 1");
                cp.max_requests_per_day = static_cast<std::uint32_t>(value.integer);
            } else if (key == "require_enclave") {
                want(Value::Kind::Bool, "a boolean");
                cp.require_enclave = value.boolean;
            } else {
                bad("unknown policy key: " + key);
            }
        }
    }
    return policy;
}

AccessPolicy load_policy_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PolicyFileError("cannot open policy file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return policy_from_text(buf.str());
}

void save_policy_file(const std::filesystem::path& path, const AccessPolicy& policy) {
    std::string text = policy_to_text(policy);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PolicyFileError("cannot write policy file: " + path.string());
    out << text;
    if (!out.flush()) throw PolicyFileError("write failed: " + path.string());
}

}  // namespace pda
