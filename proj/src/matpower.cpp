#include "edml/matpower.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace edml {

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Character scanner with line/column tracking for error positions.
class Scanner {
public:
    explicit Scanner(std::string_view text) : text_(text) {}

    bool eof() const { return pos_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }
    char get() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    std::size_t pos() const { return pos_; }
    int line() const { return line_; }
    int col() const { return col_; }
    std::string_view slice(std::size_t from, std::size_t to) const {
        return text_.substr(from, to - from);
    }

    [[noreturn]] void fail(ErrorCode code, const std::string& message) const {
        throw ParseError(code, line_, col_, message);
    }

    void skip_horizontal_space() {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') {
                get();
            } else if (c == '.' && peek(1) == '.' && peek(2) == '.') {
                // Line continuation: everything after '...' is commentary and
                // the newline itself is spliced away, so a matrix row may
                // resume on the next physical line.
                while (!eof() && peek() != '\n') get();
                if (!eof()) get();
            } else if (c == '%') {
                while (!eof() && peek() != '\n') get();
            } else {
                break;
            }
        }
    }
    void skip_space_and_comments() {
        while (!eof()) {
            skip_horizontal_space();
            if (!eof() && peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }

    std::string identifier() {
        if (eof() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) {
            fail(ErrorCode::SyntaxError, "expected identifier");
        }
        std::string out;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
            out.push_back(get());
        }
        return out;
    }

    double number() {
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        // Sign handled manually; from_chars itself accepts only a leading '-'.
        double value = 0.0;
        const char* start = begin;
        if (start < end && *start == '+') ++start;
        const auto res = std::from_chars(start, end, value, std::chars_format::general);
        if (res.ec != std::errc() || res.ptr == start) {
            fail(ErrorCode::SyntaxError, "expected a number");
        }
        const std::size_t consumed = static_cast<std::size_t>(res.ptr - begin);
        for (std::size_t i = 0; i < consumed; ++i) get();
        return value;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

CaseTable parse_matrix(Scanner& sc) {
    if (sc.peek() != '[') sc.fail(ErrorCode::SyntaxError, "expected '['");
    sc.get();
    std::vector<std::vector<double>> rows;
    std::vector<double> current;
    std::vector<int> row_lines;
    int current_line = sc.line();
    bool closed = false;
    while (!sc.eof()) {
        sc.skip_horizontal_space();
        if (sc.eof()) break;
        const char c = sc.peek();
        if (c == '\n' || c == ';') {
            sc.get();
            if (!current.empty()) {
                rows.push_back(std::move(current));
                row_lines.push_back(current_line);
                current.clear();
            }
        } else if (c == ',') {
            sc.get();
        } else if (c == ']') {
            sc.get();
            if (!current.empty()) {
                rows.push_back(std::move(current));
                row_lines.push_back(current_line);
            }
            closed = true;
            break;
        } else {
            if (current.empty()) current_line = sc.line();
            current.push_back(sc.number());
        }
    }
    if (!closed) sc.fail(ErrorCode::SyntaxError, "matrix is missing its closing ']'");

    CaseTable table;
    table.cols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != table.cols) {
            throw ParseError(ErrorCode::ColumnCountMismatch, row_lines[r], 1,
                             "row has " + std::to_string(rows[r].size()) + " values, expected " +
                                 std::to_string(table.cols));
        }
        table.values.insert(table.values.end(), rows[r].begin(), rows[r].end());
    }
    return table;
}

/// Captures raw text verbatim until the terminating ';' at bracket depth 0,
/// respecting MATLAB single-quoted strings (with '' escapes).
std::string capture_opaque(Scanner& sc) {
    const std::size_t start = sc.pos();
    int depth = 0;
    bool in_string = false;
    while (!sc.eof()) {
        const char c = sc.get();
        if (in_string) {
            if (c == '\'') {
                if (sc.peek() == '\'') sc.get();
                else in_string = false;
            }
            continue;
        }
        switch (c) {
            case '\'': in_string = true; break;
            case '[': case '{': case '(': ++depth; break;
            case ']': case '}': case ')': --depth; break;
            case ';':
                if (depth == 0) return std::string(sc.slice(start, sc.pos()));
                break;
            default: break;
        }
    }
    sc.fail(ErrorCode::SyntaxError, "unterminated assignment (no ';' found)");
}

// Minimum column counts of the published table formats.
struct KnownTable {
    const char* name;
    int min_cols;
};
constexpr KnownTable kKnownTables[] = {
    {"bus", 13},
    {"gen", 10},
    {"branch", 11},
    {"gencost", 4},
};

void check_known_width(const std::string& field, const CaseTable& table, int line) {
    for (const auto& known : kKnownTables) {
        if (field == known.name && table.rows() > 0 && table.cols < known.min_cols) {
            throw ParseError(ErrorCode::ColumnCountMismatch, line, 1,
                             field + " table has " + std::to_string(table.cols) +
                                 " columns, format requires at least " +
                                 std::to_string(known.min_cols));
        }
    }
}

void check_required_tables(const RawCase& raw) {
    for (const char* required : {"bus", "gen", "branch"}) {
        if (!raw.find_table(required)) {
            throw Error(ErrorCode::MissingTable, std::string(required) + " table is required");
        }
    }
}

}  // namespace

const CaseTable* RawCase::find_table(std::string_view table_name) const {
    for (const auto& [name, table] : tables) {
        if (name == table_name) return &table;
    }
    return nullptr;
}

RawCase parse_case(std::string_view text) {
    Scanner sc(text);
    RawCase raw;
    std::string var_name;  // struct variable, e.g. "mpc"; first use fixes it

    while (true) {
        sc.skip_space_and_comments();
        if (sc.eof()) break;

        std::string ident = sc.identifier();
        if (ident == "function") {
            sc.skip_horizontal_space();
            var_name = sc.identifier();
            sc.skip_horizontal_space();
            if (sc.peek() != '=') sc.fail(ErrorCode::SyntaxError, "expected '=' in function line");
            sc.get();
            sc.skip_horizontal_space();
            raw.name = sc.identifier();
            continue;
        }
        if (var_name.empty()) var_name = ident;
        if (ident != var_name) {
            sc.fail(ErrorCode::SyntaxError,
                    "unexpected statement; assignments must target '" + var_name + "'");
        }
        if (sc.peek() != '.') sc.fail(ErrorCode::SyntaxError, "expected '.' after struct variable");
        sc.get();
        const int field_line = sc.line();
        std::string field = sc.identifier();
        raw.field_order.push_back(field);

        sc.skip_horizontal_space();
        if (sc.peek() == '(') {
            // Indexed assignment: preserved opaquely.
            raw.opaque.push_back({field, capture_opaque(sc)});
            continue;
        }
        if (sc.peek() != '=') sc.fail(ErrorCode::SyntaxError, "expected '=' after field name");
        sc.get();
        sc.skip_horizontal_space();

        const char first = sc.peek();
        if (first == '[') {
            CaseTable table = parse_matrix(sc);
            sc.skip_horizontal_space();
            if (sc.peek() == ';') sc.get();
            check_known_width(field, table, field_line);
            raw.tables.emplace_back(field, std::move(table));
        } else if (first == '\'') {
            sc.get();
            std::string value;
            while (!sc.eof()) {
                const char c = sc.get();
                if (c == '\'') {
                    if (sc.peek() == '\'') value.push_back(sc.get());
                    else break;
                } else {
                    value.push_back(c);
                }
            }
            sc.skip_horizontal_space();
            if (sc.peek() == ';') sc.get();
            if (field == "version") {
                raw.version = value;
            } else {
                raw.opaque.push_back({field, " = '" + value + "';"});
            }
        } else if (first == '{') {
            raw.opaque.push_back({field, std::string(" = ") + capture_opaque(sc)});
        } else if (field == "baseMVA") {
            raw.base_mva = sc.number();
            sc.skip_horizontal_space();
            if (sc.peek() == ';') sc.get();
        } else {
            // Unknown scalar or expression: keep verbatim.
            raw.opaque.push_back({field, std::string(" = ") + capture_opaque(sc)});
        }
    }
    check_required_tables(raw);
    return raw;
}

namespace {

void from_json_tables(const nlohmann::json& doc, RawCase& raw) {
    if (!doc.contains("fields") || !doc["fields"].is_array()) {
        throw Error(ErrorCode::SyntaxError, "json case needs a 'fields' array");
    }
    for (const auto& field : doc["fields"]) {
        const std::string name = field.at("name").get<std::string>();
        raw.field_order.push_back(name);
        if (field.contains("table")) {
            const auto& data = field["table"];
            CaseTable table;
            int row_index = 0;
            for (const auto& row : data) {
                if (table.cols == 0 && row_index == 0) table.cols = static_cast<int>(row.size());
                if (static_cast<int>(row.size()) != table.cols) {
                    throw ParseError(ErrorCode::ColumnCountMismatch, row_index + 1, 1,
                                     "json row has " + std::to_string(row.size()) +
                                         " values, expected " + std::to_string(table.cols));
                }
                for (const auto& v : row) table.values.push_back(v.get<double>());
                ++row_index;
            }
            check_known_width(name, table, 1);
            raw.tables.emplace_back(name, std::move(table));
        } else if (field.contains("opaque")) {
            raw.opaque.push_back({name, field["opaque"].get<std::string>()});
        } else {
            throw Error(ErrorCode::SyntaxError, "json field '" + name + "' has no payload");
        }
    }
}

}  // namespace

RawCase parse_case_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(ErrorCode::SyntaxError, 1, static_cast<int>(e.byte), e.what());
    } catch (const nlohmann::json::exception& e) {
        // e.g. numeric overflow while reading a literal: no position info.
        throw Error(ErrorCode::SyntaxError, std::string("json case: ") + e.what());
    }
    RawCase raw;
    // Shape errors (wrong value types, missing keys) surface as the library's
    // typed exceptions; report them as structured syntax errors.
    try {
        if (!doc.is_object()) {
            throw Error(ErrorCode::SyntaxError, "json case must be an object");
        }
        raw.name = doc.value("name", "case");
        raw.version = doc.value("version", "2");
        raw.base_mva = doc.value("baseMVA", 100.0);
        // Both serializers pin version and baseMVA to the head of the file,
        // so the mirror records them there; the "fields" array carries the
        // order of everything else.
        raw.field_order = {"version", "baseMVA"};
        from_json_tables(doc, raw);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SyntaxError, std::string("json case shape: ") + e.what());
    }
    check_required_tables(raw);
    return raw;
}

std::string serialize_case(const RawCase& raw) {
    std::ostringstream out;
    out << "function mpc = " << raw.name << "\n";
    out << "mpc.version = '" << raw.version << "';\n";
    out << "mpc.baseMVA = " << format_double(raw.base_mva) << ";\n";

    std::size_t next_table = 0;
    std::size_t next_opaque = 0;
    auto write_table = [&](const std::string& name, const CaseTable& table) {
        out << "mpc." << name << " = [\n";
        for (int r = 0; r < table.rows(); ++r) {
            out << "\t";
            for (int c = 0; c < table.cols; ++c) {
                if (c) out << "\t";
                out << format_double(table.at(r, c));
            }
            out << ";\n";
        }
        out << "];\n";
    };

    // Fields in their recorded order; anything unlisted is appended after.
    for (const std::string& field : raw.field_order) {
        if (field == "version" || field == "baseMVA") continue;
        if (next_table < raw.tables.size() && raw.tables[next_table].first == field) {
            write_table(field, raw.tables[next_table].second);
            ++next_table;
        } else if (next_opaque < raw.opaque.size() && raw.opaque[next_opaque].name == field) {
            out << "mpc." << field << raw.opaque[next_opaque].text << "\n";
            ++next_opaque;
        }
    }
    for (; next_table < raw.tables.size(); ++next_table) {
        write_table(raw.tables[next_table].first, raw.tables[next_table].second);
    }
    for (; next_opaque < raw.opaque.size(); ++next_opaque) {
        out << "mpc." << raw.opaque[next_opaque].name << raw.opaque[next_opaque].text << "\n";
    }
    return out.str();
}

std::string serialize_case_json(const RawCase& raw) {
    nlohmann::ordered_json doc;
    doc["name"] = raw.name;
    doc["version"] = raw.version;
    doc["baseMVA"] = raw.base_mva;
    nlohmann::ordered_json fields = nlohmann::ordered_json::array();

    std::size_t next_table = 0;
    std::size_t next_opaque = 0;
    auto table_json = [](const CaseTable& table) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (int r = 0; r < table.rows(); ++r) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (int c = 0; c < table.cols; ++c) row.push_back(table.at(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    auto push_table = [&](const std::string& name, const CaseTable& table) {
        fields.push_back({{"name", name}, {"table", table_json(table)}});
    };
    for (const std::string& field : raw.field_order) {
        if (field == "version" || field == "baseMVA") continue;
        if (next_table < raw.tables.size() && raw.tables[next_table].first == field) {
            push_table(field, raw.tables[next_table].second);
            ++next_table;
        } else if (next_opaque < raw.opaque.size() && raw.opaque[next_opaque].name == field) {
            fields.push_back({{"name", field}, {"opaque", raw.opaque[next_opaque].text}});
            ++next_opaque;
        }
    }
    for (; next_table < raw.tables.size(); ++next_table) {
        push_table(raw.tables[next_table].first, raw.tables[next_table].second);
    }
    for (; next_opaque < raw.opaque.size(); ++next_opaque) {
        fields.push_back(
            {{"name", raw.opaque[next_opaque].name}, {"opaque", raw.opaque[next_opaque].text}});
    }
    doc["fields"] = std::move(fields);
    // Opaque fields may carry arbitrary bytes from a .m file; anything that is
    // not valid UTF-8 serializes as the replacement character instead of
    // aborting the write.
    return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

namespace {

bool ends_with(const std::string& s, const char* suffix) {
    const std::size_t n = std::strlen(suffix);
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

}  // namespace

RawCase load_case(const std::string& path) {
    const bool is_json = ends_with(path, ".json");
    if (!is_json && !ends_with(path, ".m")) {
        throw Error(ErrorCode::SyntaxError,
                    "unsupported case extension (want .m or .json): " + path);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingTable, "cannot open case file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    return is_json ? parse_case_json(text) : parse_case(text);
}

void save_case(const RawCase& raw, const std::string& path) {
    std::string text;
    if (ends_with(path, ".json")) text = serialize_case_json(raw);
    else if (ends_with(path, ".m")) text = serialize_case(raw);
    else throw Error(ErrorCode::SyntaxError, "unsupported case extension (want .m or .json): " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::SyntaxError, "cannot write case file: " + path);
    out << text;
}

Network to_network(const RawCase& raw) {
    const CaseTable* bus = raw.find_table("bus");
    const CaseTable* gen = raw.find_table("gen");
    const CaseTable* branch = raw.find_table("branch");
    if (!bus || !gen || !branch) {
        throw Error(ErrorCode::MissingTable, "bus, gen and branch tables are required");
    }
    const CaseTable* gencost = raw.find_table("gencost");
    if (!gencost) {
        throw Error(ErrorCode::MissingTable, "gencost table is required to build a dispatch network");
    }
    if (gencost->rows() != gen->rows() && gencost->rows() != 2 * gen->rows()) {
        throw Error(ErrorCode::UnsupportedCost,
                    "gencost must have one row per generator (or two, with reactive rows)");
    }

    Network net;
    net.base_mva = raw.base_mva;
    const double base = raw.base_mva;

    for (int r = 0; r < bus->rows(); ++r) {
        const int type = static_cast<int>(bus->at(r, 1));
        if (type == 4) continue;  // isolated per the case data
        Bus b;
        b.id = static_cast<int>(bus->at(r, 0));
        b.demand = bus->at(r, 2) / base;
        const double vm = bus->at(r, 7);
        b.voltage_mag = vm > 0.0 ? vm : 1.0;
        net.buses.push_back(b);
        if (type == 3 && !net.slack_bus) net.slack_bus = b.id;
    }

    for (int r = 0; r < branch->rows(); ++r) {
        if (branch->at(r, 10) == 0.0) continue;  // out of service
        Line line;
        line.from_bus = static_cast<int>(branch->at(r, 0));
        line.to_bus = static_cast<int>(branch->at(r, 1));
        line.r = branch->at(r, 2);
        line.x = branch->at(r, 3);
        line.shunt_susceptance = branch->at(r, 4);
        const double rate_a = branch->at(r, 5);
        if (rate_a > 0.0) line.rating_mva = rate_a;
        const double ratio = branch->at(r, 8);
        line.tap_ratio = ratio != 0.0 ? ratio : 1.0;
        line.phase_shift = branch->at(r, 9) * M_PI / 180.0;
        net.lines.push_back(line);
    }

    for (int r = 0; r < gen->rows(); ++r) {
        if (gen->at(r, 7) <= 0.0) continue;  // out of service
        Generator g;
        g.bus = static_cast<int>(gen->at(r, 0));
        g.p_max = gen->at(r, 8) / base;
        g.p_min = gen->at(r, 9) / base;

        const int model = static_cast<int>(gencost->at(r, 0));
        const int ncost = static_cast<int>(gencost->at(r, 3));
        if (gencost->cols < 4 + (model == 1 ? 2 * ncost : ncost)) {
            throw Error(ErrorCode::UnsupportedCost,
                        "gencost row " + std::to_string(r + 1) + " is narrower than its NCOST");
        }
        if (model == 2) {
            if (ncost > 3) {
                throw Error(ErrorCode::UnsupportedCost,
                            "polynomial cost above degree 2 on generator row " +
                                std::to_string(r + 1));
            }
            QuadraticCost q;
            // Coefficients are highest degree first, in MW terms.
            double coeff[3] = {0.0, 0.0, 0.0};  // c2, c1, c0
            for (int k = 0; k < ncost; ++k) coeff[3 - ncost + k] = gencost->at(r, 4 + k);
            q.c2 = coeff[0] * base * base;
            q.c1 = coeff[1] * base;
            q.c0 = coeff[2];
            g.cost = q;
        } else if (model == 1) {
            PiecewiseLinearCost pwl;
            for (int k = 0; k < ncost; ++k) {
                pwl.breakpoints.push_back(gencost->at(r, 4 + 2 * k) / base);
                pwl.values.push_back(gencost->at(r, 4 + 2 * k + 1));
            }
            g.cost = pwl;
        } else {
            throw Error(ErrorCode::UnsupportedCost,
                        "unknown cost model " + std::to_string(model) + " on generator row " +
                            std::to_string(r + 1));
        }
        if (!cost_is_convex(g.cost)) {
            throw Error(ErrorCode::UnsupportedCost,
                        "non-convex cost on generator row " + std::to_string(r + 1));
        }
        net.generators.push_back(std::move(g));
    }

    // Endpoint and connectivity checks on the filtered network.
    validate(net);
    if (!check_connected(net)) {
        throw Error(ErrorCode::IsolatedBusAfterFiltering,
                    "network is not connected after dropping out-of-service elements");
    }
    return net;
}

RawCase from_network(const Network& network, const std::string& case_name) {
    RawCase raw;
    raw.name = case_name;
    raw.version = "2";
    raw.base_mva = network.base_mva;
    const double base = network.base_mva;

    std::vector<char> has_gen(network.buses.size(), 0);
    for (const auto& g : network.generators) has_gen[network.bus_index(g.bus)] = 1;
    const int slack = network.slack_bus.value_or(network.buses.front().id);

    CaseTable bus;
    bus.cols = 13;
    for (const auto& b : network.buses) {
        const int type = b.id == slack ? 3 : (has_gen[network.bus_index(b.id)] ? 2 : 1);
        const double row[13] = {static_cast<double>(b.id), static_cast<double>(type),
                                b.demand * base, 0, 0, 0, 1, b.voltage_mag, 0, 0, 1, 1.1, 0.9};
        bus.values.insert(bus.values.end(), row, row + 13);
    }

    CaseTable gen;
    gen.cols = 10;
    for (const auto& g : network.generators) {
        const double row[10] = {static_cast<double>(g.bus), 0, 0, 0, 0, 1, base, 1,
                                g.p_max * base, g.p_min * base};
        gen.values.insert(gen.values.end(), row, row + 10);
    }

    CaseTable branch;
    branch.cols = 13;
    for (const auto& l : network.lines) {
        const double row[13] = {static_cast<double>(l.from_bus),
                                static_cast<double>(l.to_bus),
                                l.r,
                                l.x,
                                l.shunt_susceptance,
                                l.rating_mva.value_or(0.0),
                                0,
                                0,
                                l.tap_ratio,
                                l.phase_shift * 180.0 / M_PI,
                                1,
                                -360,
                                360};
        branch.values.insert(branch.values.end(), row, row + 13);
    }

    // gencost rows are rectangular: width fits the widest cost, zero padded.
    int width = 4;
    for (const auto& g : network.generators) {
        if (const auto* pwl = std::get_if<PiecewiseLinearCost>(&g.cost)) {
            width = std::max(width, 4 + 2 * static_cast<int>(pwl->breakpoints.size()));
        } else {
            width = std::max(width, 7);
        }
    }
    CaseTable gencost;
    gencost.cols = width;
    for (const auto& g : network.generators) {
        std::vector<double> row(width, 0.0);
        if (const auto* q = std::get_if<QuadraticCost>(&g.cost)) {
            row[0] = 2;
            row[3] = 3;
            row[4] = q->c2 / (base * base);
            row[5] = q->c1 / base;
            row[6] = q->c0;
        } else {
            const auto& pwl = std::get<PiecewiseLinearCost>(g.cost);
            row[0] = 1;
            row[3] = static_cast<double>(pwl.breakpoints.size());
            for (std::size_t k = 0; k < pwl.breakpoints.size(); ++k) {
                row[4 + 2 * k] = pwl.breakpoints[k] * base;
                row[4 + 2 * k + 1] = pwl.values[k];
            }
        }
        gencost.values.insert(gencost.values.end(), row.begin(), row.end());
    }

    raw.tables.emplace_back("bus", std::move(bus));
    raw.tables.emplace_back("gen", std::move(gen));
    raw.tables.emplace_back("branch", std::move(branch));
    raw.tables.emplace_back("gencost", std::move(gencost));
    raw.field_order = {"version", "baseMVA", "bus", "gen", "branch", "gencost"};
    return raw;
}

}  // namespace edml
