#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "edml/network.hpp"

namespace edml {

/// Raw numeric table from a case file: row-major values, fixed column count.
struct CaseTable {
    int cols = 0;
    std::vector<double> values;

    int rows() const { return cols > 0 ? static_cast<int>(values.size()) / cols : 0; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// A case field this parser does not interpret, preserved verbatim so that
/// read -> write round trips do not lose information.
struct OpaqueField {
    std::string name;  ///< field name after the struct variable, e.g. "bus_name"
    std::string text;  ///< remainder of the assignment, through the closing ';'
};

/// Parsed case data: the standard tables plus anything else the file carried.
/// `field_order` lists every field in its original file order so writes can
/// reproduce the layout. Both serializers pin `version` and `baseMVA` to the
/// head of the output, so after one write the order is canonical.
struct RawCase {
    std::string name = "case";
    std::string version = "2";
    double base_mva = 100.0;
    std::vector<std::pair<std::string, CaseTable>> tables;
    std::vector<OpaqueField> opaque;
    std::vector<std::string> field_order;  ///< all fields in file order

    const CaseTable* find_table(std::string_view table_name) const;
};

/// Parses MATPOWER-style .m case text. Structured failures:
///   SyntaxError          malformed construct (position reported)
///   ColumnCountMismatch  ragged rows, or a known table narrower than its format
///   MissingTable         bus/gen/branch absent
RawCase parse_case(std::string_view text);

/// JSON mirror of the same data model (object with name/version/baseMVA,
/// tables as arrays of row arrays, opaque fields as strings).
RawCase parse_case_json(std::string_view text);

std::string serialize_case(const RawCase& raw);
std::string serialize_case_json(const RawCase& raw);

/// Reads a case from a file, dispatching on extension (.m or .json).
RawCase load_case(const std::string& path);
void save_case(const RawCase& raw, const std::string& path);

/// Interprets the standard tables into a Network:
///  - out-of-service branches/generators and isolated buses are dropped,
///  - demand, limits and costs are converted to per-unit on baseMVA,
///  - ratio 0 means a nominal 1:1 tap; rateA 0 means unlimited,
///  - gencost rows map to generators in order (reactive rows ignored).
/// Throws UnsupportedCost for polynomials above degree 2 or non-convex data,
/// IsolatedBusAfterFiltering when the in-service network is not connected.
Network to_network(const RawCase& raw);

/// Builds the standard tables back from a Network (buses in order, one
/// gencost row per generator). The result parses back to the same network.
RawCase from_network(const Network& network, const std::string& case_name = "case");

}  // namespace edml
