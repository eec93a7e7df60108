#include "morder/model.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace morder {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& s, int line_no) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::uint64_t parse_unsigned(const std::string& s, const std::string& key) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') {
        throw ParseError("field '" + key + "': expected a nonnegative integer, got '" + s + "'");
    }
    return v;
}

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

MarkovModel parse_model(const std::string& text, std::string id) {
    std::map<std::string, std::string> scalars;
    std::vector<std::vector<double>> kernel_rows;
    std::vector<double> initial;
    bool have_kernel = false;
    bool have_initial = false;
    std::string list_key;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (list_key == "kernel") {
                kernel_rows.push_back(parse_numbers(line, line_no));
            } else if (list_key == "initial") {
                const auto v = parse_numbers(line, line_no);
                initial.insert(initial.end(), v.begin(), v.end());
            } else {
                throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
            }
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        list_key.clear();
        if (key == "kernel") {
            if (have_kernel) throw ParseError("duplicate field 'kernel'");
            have_kernel = true;
            list_key = key;
            if (!value.empty()) kernel_rows.push_back(parse_numbers(value, line_no));
        } else if (key == "initial") {
            if (have_initial) throw ParseError("duplicate field 'initial'");
            have_initial = true;
            list_key = key;
            initial = parse_numbers(value, line_no);
        } else if (key == "alphabet_size" || key == "order" || key == "id") {
            if (!scalars.emplace(key, value).second) throw ParseError("duplicate field '" + key + "'");
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
        }
    }

    for (const char* key : {"alphabet_size", "order"}) {
        if (!scalars.count(key)) throw ParseError(std::string("missing field '") + key + "'");
    }
    if (!have_kernel) throw ParseError("missing field 'kernel'");
    const auto m = parse_unsigned(scalars["alphabet_size"], "alphabet_size");
    const auto r = parse_unsigned(scalars["order"], "order");
    if (m < 2 || m > UINT32_MAX) throw ParseError("field 'alphabet_size': must be at least 2");
    if (r > 64) throw ParseError("field 'order': too large");
    if (scalars.count("id")) id = scalars["id"];  // an explicit id beats the file name

    const std::uint64_t contexts = checked_pow(m, static_cast<std::uint32_t>(r));
    if (kernel_rows.size() != contexts) {
        throw ParseError("field 'kernel': expected " + std::to_string(contexts) + " rows, got " +
                         std::to_string(kernel_rows.size()));
    }
    std::vector<double> kernel;
    kernel.reserve(contexts * m);
    for (const auto& row : kernel_rows) {
        if (row.size() != m) {
            throw ParseError("field 'kernel': every row needs " + std::to_string(m) + " entries");
        }
        kernel.insert(kernel.end(), row.begin(), row.end());
    }

    std::optional<std::vector<double>> init;
    if (have_initial) init = std::move(initial);
    try {
        return MarkovModel::create(static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(r),
                                   std::move(kernel), std::move(init), std::move(id));
    } catch (const ReducibleChain&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("invalid model: ") + e.what());
    }
}

MarkovModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string id = path;
    if (const auto slash = id.find_last_of('/'); slash != std::string::npos) id = id.substr(slash + 1);
    return parse_model(ss.str(), id);
}

std::string format_model(const MarkovModel& model) {
    std::ostringstream out;
    const std::uint32_t m = model.alphabet_size();
    out << "alphabet_size = " << m << "\n";
    out << "order = " << model.order() << "\n";
    out << "kernel =\n";
    for (std::uint64_t c = 0; c < model.num_contexts(); ++c) {
        const auto row = model.row(c);
        for (std::uint32_t b = 0; b < m; ++b) out << (b ? " " : "") << fmt_full(row[b]);
        out << "\n";
    }
    out << "initial =";
    for (double p : model.initial()) out << " " << fmt_full(p);
    out << "\n";
    return out.str();
}

std::string format_path(const PathSample& path, std::uint32_t alphabet_size) {
    std::string out = "path v1 alphabet_size=" + std::to_string(alphabet_size) +
                      " n=" + std::to_string(path.size()) + " seed=" + std::to_string(path.seed) +
                      " model=" + (path.model_id.empty() ? std::string("-") : path.model_id) + "\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
        out += std::to_string(path.symbols[i]);
        out += ((i + 1) % 64 == 0 || i + 1 == path.size()) ? '\n' : ' ';
    }
    return out;
}

PathSample parse_path(const std::string& text, std::uint32_t* alphabet_size) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty path file");
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "path" || version != "v1") throw ParseError("path file: bad header");

    std::map<std::string, std::string> fields;
    std::string kv;
    while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("path file: bad header field '" + kv + "'");
        fields[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    for (const char* key : {"alphabet_size", "n", "seed", "model"}) {
        if (!fields.count(key)) throw ParseError(std::string("path file: missing header field '") + key + "'");
    }
    const auto m = parse_unsigned(fields["alphabet_size"], "alphabet_size");
    const auto n = parse_unsigned(fields["n"], "n");

    PathSample path;
    path.seed = parse_unsigned(fields["seed"], "seed");
    path.model_id = fields["model"] == "-" ? std::string() : fields["model"];
    path.symbols.reserve(n);
    std::string tok;
    while (in >> tok) {
        const auto s = parse_unsigned(tok, "symbol");
        if (s >= m) throw ParseError("path file: symbol " + tok + " outside the alphabet");
        path.symbols.push_back(static_cast<Symbol>(s));
    }
    if (path.symbols.size() != n) throw ParseError("path file: symbol count does not match n");
    if (alphabet_size) *alphabet_size = static_cast<std::uint32_t>(m);
    return path;
}

}  // namespace morder
