#pragma once

#include "gridse/common.hpp"

#include <algorithm>
#include <cctype>
#include <complex>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gridse {

enum class BusKind { slack, pv, pq };

/// One bus of the network. Loads are net demand in per-unit on base_mva
/// (scheduled generation already subtracted); shunts are the bus-level
/// admittance to ground.
struct BusRecord {
    int id = 0;
    BusKind kind = BusKind::pq;
    double base_vm = 1.0;   // voltage magnitude, per-unit (setpoint for slack/pv)
    double base_va = 0.0;   // angle, radians
    double load_p = 0.0;
    double load_q = 0.0;
    double shunt_g = 0.0;
    double shunt_b = 0.0;
};

/// One branch. Raw series impedance plus total line charging; off-nominal
/// transformer taps are kept and folded into the derived admittances.
struct BranchRecord {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double charging_b = 0.0;
    double tap = 1.0;
};

/// Derived pi-model parameters of a branch: series admittance plus the
/// per-end shunt admittances (the equivalent pi of a tapped transformer
/// has unequal ends, which is why both are carried).
struct BranchParams {
    double series_g = 0.0;
    double series_b = 0.0;
    double from_g0 = 0.0;
    double from_b0 = 0.0;
    double to_g0 = 0.0;
    double to_b0 = 0.0;
};

/// Series admittance and per-end shunts for one branch.
///
/// y = 1/(r + jx); with tap ratio a the equivalent pi uses series y/a,
/// from-end shunt (y + j*bc/2)/a^2 - y/a and to-end shunt (y + j*bc/2) - y/a.
/// For a = 1 this reduces to half the charging at each end.
inline BranchParams branch_admittance(const BranchRecord& br) {
    if (br.r == 0.0 && br.x == 0.0)
        throw ZeroImpedance("branch " + std::to_string(br.from_bus) + "-" +
                            std::to_string(br.to_bus));
    const std::complex<double> y = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> bc(0.0, br.charging_b / 2.0);
    const double a = br.tap == 0.0 ? 1.0 : br.tap;
    const std::complex<double> ys = y / a;
    const std::complex<double> yf = (y + bc) / (a * a) - ys;
    const std::complex<double> yt = (y + bc) - ys;
    BranchParams p;
    p.series_g = ys.real();
    p.series_b = ys.imag();
    p.from_g0 = yf.real();
    p.from_b0 = yf.imag();
    p.to_g0 = yt.real();
    p.to_b0 = yt.imag();
    return p;
}

struct NetworkModel {
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    std::vector<BranchParams> params;  // aligned with branches
    double base_mva = 100.0;

    // adjacency[i] lists (branch index, true when bus i is the from end)
    std::vector<std::vector<std::pair<int, bool>>> adjacency;
    std::map<int, int> id_to_index;
    int slack_index = -1;

    int bus_count() const { return static_cast<int>(buses.size()); }
    int branch_count() const { return static_cast<int>(branches.size()); }

    int index_of(int bus_id) const {
        auto it = id_to_index.find(bus_id);
        if (it == id_to_index.end())
            throw UnknownBus("bus id " + std::to_string(bus_id));
        return it->second;
    }

    const BranchRecord& branch_at(int idx) const {
        if (idx < 0 || idx >= branch_count())
            throw UnknownBranch("branch index " + std::to_string(idx));
        return branches[static_cast<size_t>(idx)];
    }

    /// Rebuild the derived tables after buses/branches are filled in.
    void finalize() {
        id_to_index.clear();
        for (size_t i = 0; i < buses.size(); ++i) {
            if (!id_to_index.emplace(buses[i].id, static_cast<int>(i)).second)
                throw DuplicateBusId("bus id " + std::to_string(buses[i].id));
        }
        params.clear();
        params.reserve(branches.size());
        adjacency.assign(buses.size(), {});
        slack_index = -1;
        for (size_t i = 0; i < buses.size(); ++i)
            if (buses[i].kind == BusKind::slack && slack_index < 0)
                slack_index = static_cast<int>(i);
        for (size_t k = 0; k < branches.size(); ++k) {
            const auto& br = branches[k];
            auto fit = id_to_index.find(br.from_bus);
            auto tit = id_to_index.find(br.to_bus);
            if (fit == id_to_index.end() || tit == id_to_index.end())
                throw InconsistentTopology("branch " + std::to_string(br.from_bus) +
                                           "-" + std::to_string(br.to_bus) +
                                           " references a missing bus");
            params.push_back(branch_admittance(br));
            adjacency[static_cast<size_t>(fit->second)].emplace_back(static_cast<int>(k), true);
            adjacency[static_cast<size_t>(tit->second)].emplace_back(static_cast<int>(k), false);
        }
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class DiagnosticCode {
    NoSlack,
    MultipleSlack,
    DuplicateBusId,
    NonPositiveVoltage,
    DanglingBranch,
    SelfLoop,
    ZeroImpedanceBranch,
    Disconnected,
};

struct Diagnostic {
    DiagnosticCode code;
    std::string message;
};

inline const char* diagnostic_name(DiagnosticCode c) {
    switch (c) {
        case DiagnosticCode::NoSlack: return "NoSlack";
        case DiagnosticCode::MultipleSlack: return "MultipleSlack";
        case DiagnosticCode::DuplicateBusId: return "DuplicateBusId";
        case DiagnosticCode::NonPositiveVoltage: return "NonPositiveVoltage";
        case DiagnosticCode::DanglingBranch: return "DanglingBranch";
        case DiagnosticCode::SelfLoop: return "SelfLoop";
        case DiagnosticCode::ZeroImpedanceBranch: return "ZeroImpedanceBranch";
        case DiagnosticCode::Disconnected: return "Disconnected";
    }
    return "Unknown";
}

/// Non-throwing structural check; an empty result means all invariants hold
/// and the graph is connected.
inline std::vector<Diagnostic> validate_network(const NetworkModel& model) {
    std::vector<Diagnostic> out;
    int slack_count = 0;
    std::map<int, int> seen;
    for (const auto& b : model.buses) {
        if (b.kind == BusKind::slack) ++slack_count;
        if (++seen[b.id] == 2)
            out.push_back({DiagnosticCode::DuplicateBusId,
                           "bus id " + std::to_string(b.id) + " appears more than once"});
        if (b.base_vm <= 0.0)
            out.push_back({DiagnosticCode::NonPositiveVoltage,
                           "bus " + std::to_string(b.id) + " has non-positive voltage"});
    }
    if (slack_count == 0) out.push_back({DiagnosticCode::NoSlack, "no slack bus"});
    if (slack_count > 1)
        out.push_back({DiagnosticCode::MultipleSlack,
                       std::to_string(slack_count) + " slack buses"});

    std::map<int, std::vector<int>> neighbors;
    for (const auto& br : model.branches) {
        const std::string tag =
            "branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);
        if (br.from_bus == br.to_bus)
            out.push_back({DiagnosticCode::SelfLoop, tag + " is a self loop"});
        if (!seen.count(br.from_bus) || !seen.count(br.to_bus)) {
            out.push_back({DiagnosticCode::DanglingBranch, tag + " misses an endpoint"});
            continue;
        }
        if (br.r == 0.0 && br.x == 0.0)
            out.push_back({DiagnosticCode::ZeroImpedanceBranch, tag + " has zero impedance"});
        neighbors[br.from_bus].push_back(br.to_bus);
        neighbors[br.to_bus].push_back(br.from_bus);
    }

    if (!model.buses.empty()) {
        std::map<int, bool> visited;
        std::vector<int> stack{model.buses.front().id};
        visited[model.buses.front().id] = true;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : neighbors[v])
                if (!visited[w]) {
                    visited[w] = true;
                    stack.push_back(w);
                }
        }
        for (const auto& b : model.buses)
            if (!visited[b.id])
                out.push_back({DiagnosticCode::Disconnected,
                               "bus " + std::to_string(b.id) + " is unreachable"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Case parsing
// ---------------------------------------------------------------------------

enum class CaseFormat { matpower, native_csv };

namespace detail {

inline std::string strip_matlab_comments(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        out.push_back(in_comment ? ' ' : c);
    }
    return out;
}

/// Extract the numeric rows of `mpc.<name> = [ ... ];`.
inline std::vector<std::vector<double>> matrix_block(const std::string& text,
                                                     const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    while (pos != std::string::npos) {
        size_t eq = text.find('=', pos + key.size());
        size_t open = text.find('[', pos + key.size());
        if (eq != std::string::npos && open != std::string::npos) break;
        pos = text.find(key, pos + key.size());
    }
    if (pos == std::string::npos)
        throw MalformedCase("missing block mpc." + name);
    size_t open = text.find('[', pos);
    size_t close = text.find(']', open);
    if (open == std::string::npos || close == std::string::npos)
        throw MalformedCase("unterminated block mpc." + name);

    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::string token;
    auto flush_token = [&]() {
        if (token.empty()) return;
        try {
            size_t used = 0;
            double v = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            row.push_back(v);
        } catch (const std::exception&) {
            throw MalformedCase("bad numeric token '" + token + "' in mpc." + name);
        }
        token.clear();
    };
    for (size_t i = open + 1; i < close; ++i) {
        char c = text[i];
        if (c == ';' || c == '\n') {
            flush_token();
            if (!row.empty()) rows.push_back(std::move(row));
            row.clear();
        } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            flush_token();
        } else {
            token.push_back(c);
        }
    }
    flush_token();
    if (!row.empty()) rows.push_back(std::move(row));
    return rows;
}

inline double scalar_field(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    if (pos == std::string::npos) throw MalformedCase("missing mpc." + name);
    size_t eq = text.find('=', pos);
    if (eq == std::string::npos) throw MalformedCase("missing value for mpc." + name);
    try {
        return std::stod(text.substr(eq + 1));
    } catch (const std::exception&) {
        throw MalformedCase("bad value for mpc." + name);
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace detail

inline NetworkModel parse_matpower_case(const std::string& raw) {
    const std::string text = detail::strip_matlab_comments(raw);
    NetworkModel model;
    model.base_mva = detail::scalar_field(text, "baseMVA");
    if (model.base_mva <= 0.0) throw MalformedCase("baseMVA must be positive");

    const auto bus_rows = detail::matrix_block(text, "bus");
    const auto gen_rows = detail::matrix_block(text, "gen");
    const auto branch_rows = detail::matrix_block(text, "branch");
    if (bus_rows.empty()) throw MalformedCase("empty bus block");

    std::map<int, double> gen_p;     // scheduled MW per bus
    std::map<int, double> gen_vset;  // voltage setpoint per bus
    for (const auto& g : gen_rows) {
        if (g.size() < 8) throw MalformedCase("gen row too short");
        if (g[7] == 0.0) continue;  // out of service
        const int bus = static_cast<int>(g[0]);
        gen_p[bus] += g[1];
        gen_vset[bus] = g[5];
    }

    for (const auto& b : bus_rows) {
        if (b.size() < 9) throw MalformedCase("bus row too short");
        BusRecord rec;
        rec.id = static_cast<int>(b[0]);
        const int type = static_cast<int>(b[1]);
        rec.kind = type == 3 ? BusKind::slack : (type == 2 ? BusKind::pv : BusKind::pq);
        rec.load_p = b[2] / model.base_mva;
        rec.load_q = b[3] / model.base_mva;
        rec.shunt_g = b[4] / model.base_mva;
        rec.shunt_b = b[5] / model.base_mva;
        rec.base_vm = b[7];
        rec.base_va = b[8] * M_PI / 180.0;
        if (auto it = gen_p.find(rec.id); it != gen_p.end())
            rec.load_p -= it->second / model.base_mva;
        if (auto it = gen_vset.find(rec.id); it != gen_vset.end() && it->second > 0.0)
            rec.base_vm = it->second;
        model.buses.push_back(rec);
    }

    for (const auto& br : branch_rows) {
        if (br.size() < 5) throw MalformedCase("branch row too short");
        if (br.size() >= 11 && br[10] == 0.0) continue;  // out of service
        BranchRecord rec;
        rec.from_bus = static_cast<int>(br[0]);
        rec.to_bus = static_cast<int>(br[1]);
        rec.r = br[2];
        rec.x = br[3];
        rec.charging_b = br[4];
        rec.tap = br.size() >= 9 && br[8] != 0.0 ? br[8] : 1.0;
        model.branches.push_back(rec);
    }
    return model;
}

inline NetworkModel parse_native_csv(const std::string& text) {
    NetworkModel model;
    std::istringstream in(text);
    std::string line;
    enum class Section { none, buses, branches } section = Section::none;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("id,kind", 0) == 0) {
            section = Section::buses;
            continue;
        }
        if (line.rfind("from,to", 0) == 0) {
            section = Section::branches;
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        try {
            if (section == Section::buses) {
                if (cells.size() < 8) throw MalformedCase("bus row too short: " + line);
                BusRecord rec;
                rec.id = std::stoi(cells[0]);
                const std::string kind = detail::trim(cells[1]);
                if (kind == "slack") rec.kind = BusKind::slack;
                else if (kind == "pv") rec.kind = BusKind::pv;
                else if (kind == "pq") rec.kind = BusKind::pq;
                else throw MalformedCase("unknown bus kind '" + kind + "'");
                rec.base_vm = std::stod(cells[2]);
                rec.base_va = std::stod(cells[3]);
                rec.load_p = std::stod(cells[4]);
                rec.load_q = std::stod(cells[5]);
                rec.shunt_g = std::stod(cells[6]);
                rec.shunt_b = std::stod(cells[7]);
                model.buses.push_back(rec);
            } else if (section == Section::branches) {
                if (cells.size() < 5) throw MalformedCase("branch row too short: " + line);
                BranchRecord rec;
                rec.from_bus = std::stoi(cells[0]);
                rec.to_bus = std::stoi(cells[1]);
                rec.r = std::stod(cells[2]);
                rec.x = std::stod(cells[3]);
                rec.charging_b = std::stod(cells[4]);
                rec.tap = cells.size() >= 6 && !detail::trim(cells[5]).empty()
                              ? std::stod(cells[5])
                              : 1.0;
                model.branches.push_back(rec);
            } else {
                throw MalformedCase("data before any csv header: " + line);
            }
        } catch (const MalformedCase&) {
            throw;
        } catch (const std::exception&) {
            throw MalformedCase("unparseable row: " + line);
        }
    }
    if (model.buses.empty()) throw MalformedCase("no bus table found");
    return model;
}

/// Parse case text into a validated model. Throws on structural defects that
/// make the model unusable; softer issues are left to validate_network.
inline NetworkModel parse_case(const std::string& text, CaseFormat format) {
    if (detail::trim(text).empty()) throw MalformedCase("empty case text");
    NetworkModel model = format == CaseFormat::matpower ? parse_matpower_case(text)
                                                        : parse_native_csv(text);
    model.finalize();  // throws DuplicateBusId / InconsistentTopology
    bool has_slack = false;
    for (const auto& b : model.buses) has_slack |= b.kind == BusKind::slack;
    if (!has_slack) throw NoSlackBus("case has no slack bus");
    for (const auto& d : validate_network(model)) {
        if (d.code == DiagnosticCode::SelfLoop || d.code == DiagnosticCode::Disconnected ||
            d.code == DiagnosticCode::ZeroImpedanceBranch)
            throw InconsistentTopology(d.message);
        if (d.code == DiagnosticCode::MultipleSlack ||
            d.code == DiagnosticCode::NonPositiveVoltage)
            throw MalformedCase(d.message);
    }
    return model;
}

/// Serialize to the native csv format (both tables in one text, each with
/// its header). Values keep full double precision so a reparse is exact.
inline std::string to_native_csv(const NetworkModel& model) {
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    std::string out = "id,kind,vm,va,pd,qd,gs,bs\n";
    for (const auto& b : model.buses) {
        const char* kind = b.kind == BusKind::slack ? "slack"
                           : b.kind == BusKind::pv  ? "pv"
                                                    : "pq";
        out += std::to_string(b.id) + "," + kind + "," + num(b.base_vm) + "," +
               num(b.base_va) + "," + num(b.load_p) + "," + num(b.load_q) + "," +
               num(b.shunt_g) + "," + num(b.shunt_b) + "\n";
    }
    out += "from,to,r,x,b,tap\n";
    for (const auto& br : model.branches)
        out += std::to_string(br.from_bus) + "," + std::to_string(br.to_bus) + "," +
               num(br.r) + "," + num(br.x) + "," + num(br.charging_b) + "," +
               num(br.tap) + "\n";
    return out;
}

}  // namespace gridse
