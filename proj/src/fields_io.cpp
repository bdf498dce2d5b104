#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "halftrace/errors.hpp"
#include "halftrace/fields.hpp"

namespace halftrace::fields {

namespace {

std::string csv_path_for(const std::string& sidecar_path) {
    std::string p = sidecar_path;
    const auto dot = p.rfind(".json");
    if (dot != std::string::npos) p = p.substr(0, dot);
    return p + ".csv";
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json grid_to_json(const GridDomain& g) {
    nlohmann::json j{{"family", "grid"},       {"ambient_dim", g.ambient_dim},
                     {"axes", g.axes},         {"fixed", g.fixed},
                     {"origin", g.origin},     {"shape", g.shape},
                     {"step", g.step}};
    if (!g.node_weight.empty()) j["node_weight"] = g.node_weight;
    return j;
}

GridDomain grid_from_json(const nlohmann::json& j) {
    GridDomain g;
    g.ambient_dim = j.at("ambient_dim").get<int>();
    g.axes = j.at("axes").get<std::vector<int>>();
    g.fixed = j.at("fixed").get<std::vector<double>>();
    g.origin = j.at("origin").get<std::vector<double>>();
    g.shape = j.at("shape").get<std::vector<int>>();
    g.step = j.at("step").get<double>();
    if (j.contains("node_weight")) g.node_weight = j.at("node_weight").get<std::vector<double>>();
    return g;
}

cubical::CellKind kind_from_string(const std::string& s) {
    if (s == "primal_full") return cubical::CellKind::PrimalFull;
    if (s == "primal_clipped_half") return cubical::CellKind::PrimalClippedHalf;
    if (s == "boundary_trace") return cubical::CellKind::BoundaryTrace;
    if (s == "dual") return cubical::CellKind::Dual;
    throw DomainError("unknown cell kind: " + s);
}

}  // namespace

void save_map(const DiscreteMap& u, const std::string& sidecar_path) {
    nlohmann::json j;
    if (u.grid) {
        j["domain"] = grid_to_json(*u.grid);
    } else if (u.skeleton) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : u.skeleton->cells) cells.push_back(cubical::cell_to_json(c));
        j["domain"] = {{"family", "skeleton"},
                       {"intervals", u.skeleton->intervals},
                       {"cells", std::move(cells)}};
    } else {
        throw DomainError("save_map: only grid and skeleton domains serialize");
    }
    j["target"] = {{"ambient_dim", u.target.ambient_dim}, {"tube_radius", u.target.tube_radius}};
    j["value_dim"] = u.value_dim;
    const std::string csv = csv_path_for(sidecar_path);
    j["csv"] = csv;

    std::ofstream side(sidecar_path);
    if (!side) throw ConfigError("save_map: cannot write " + sidecar_path);
    side << j.dump(2) << '\n';

    std::ofstream out(csv);
    if (!out) throw ConfigError("save_map: cannot write " + csv);
    const int m = u.grid ? u.grid->ambient_dim : u.skeleton->ambient_dim;
    for (int a = 0; a < m; ++a) out << "x" << a << ',';
    for (int d = 0; d < u.value_dim; ++d) out << 'v' << d << (d + 1 < u.value_dim ? "," : "\n");
    for (std::size_t i = 0; i < u.node_count(); ++i) {
        const auto pos = u.node_position(i);
        for (double c : pos) out << format_double(c) << ',';
        const auto v = u.value(i);
        for (int d = 0; d < u.value_dim; ++d)
            out << format_double(v[static_cast<std::size_t>(d)]) << (d + 1 < u.value_dim ? "," : "\n");
    }
}

DiscreteMap load_map(const std::string& sidecar_path) {
    std::ifstream side(sidecar_path);
    if (!side) throw ConfigError("load_map: cannot read " + sidecar_path);
    nlohmann::json j;
    side >> j;

    DiscreteMap u;
    u.target.ambient_dim = j.at("target").at("ambient_dim").get<int>();
    u.target.tube_radius = j.at("target").at("tube_radius").get<double>();
    u.value_dim = j.at("value_dim").get<int>();

    const auto& dom = j.at("domain");
    if (dom.at("family") == "grid") {
        u.grid = std::make_shared<GridDomain>(grid_from_json(dom));
    } else if (dom.at("family") == "skeleton") {
        std::vector<cubical::CubicalCell> cells;
        for (const auto& cj : dom.at("cells")) {
            cubical::CubicalCell c;
            c.dim = cj.at("dim").get<int>();
            c.anchor = cj.at("anchor").get<std::vector<int>>();
            c.free_axes = cj.at("free_axes").get<std::vector<int>>();
            c.kind = kind_from_string(cj.at("kind").get<std::string>());
            c.side = cj.at("kappa").get<double>();
            c.shift = cj.at("shift").get<std::vector<double>>();
            cells.push_back(std::move(c));
        }
        u.skeleton = std::make_shared<SkeletonDomain>(
            SkeletonDomain::build(std::move(cells), dom.at("intervals").get<int>()));
    } else {
        throw ConfigError("load_map: unknown domain family");
    }

    std::ifstream csv(j.at("csv").get<std::string>());
    if (!csv) throw ConfigError("load_map: cannot read sample csv");
    std::string line;
    std::getline(csv, line);  // header
    u.values.resize(u.node_count() * static_cast<std::size_t>(u.value_dim));
    const int m = u.grid ? u.grid->ambient_dim : u.skeleton->ambient_dim;
    std::size_t row = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        if (row >= u.node_count()) throw ConfigError("load_map: too many sample rows");
        std::stringstream ss(line);
        std::string tok;
        for (int skip = 0; skip < m; ++skip) std::getline(ss, tok, ',');
        for (int d = 0; d < u.value_dim; ++d) {
            std::getline(ss, tok, ',');
            u.values[row * static_cast<std::size_t>(u.value_dim) + static_cast<std::size_t>(d)] =
                std::stod(tok);
        }
        ++row;
    }
    if (row != u.node_count()) throw ConfigError("load_map: sample row count mismatch");
    return u;
}

GridField gradient_magnitude_field(const DiscreteMap& u) {
    if (!u.grid) throw DomainError("gradient_magnitude_field: expects a grid domain");
    const auto& dom = *u.grid;
    GridField out;
    out.domain = dom;
    out.value_dim = 1;
    out.values.assign(dom.size(), 0.0);

    const auto& shape = dom.shape;
    const std::size_t naxes = shape.size();
    std::vector<std::size_t> stride(naxes, 1);
    for (std::size_t a = naxes; a-- > 1;)
        stride[a - 1] = stride[a] * static_cast<std::size_t>(shape[a]);

    const std::size_t count = dom.size();
    std::vector<int> idx(naxes, 0);
    for (std::size_t flat = 0; flat < count; ++flat) {
        double g2 = 0.0;
        for (std::size_t a = 0; a < naxes; ++a) {
            std::size_t up = flat, dn = flat;
            double denom = dom.step;
            if (idx[a] == 0) {
                up = flat + stride[a];
            } else if (idx[a] == shape[a] - 1) {
                dn = flat - stride[a];
            } else {
                up = flat + stride[a];
                dn = flat - stride[a];
                denom = 2.0 * dom.step;
            }
            const auto vu = u.value(up);
            const auto vd = u.value(dn);
            for (int d = 0; d < u.value_dim; ++d) {
                const double der =
                    (vu[static_cast<std::size_t>(d)] - vd[static_cast<std::size_t>(d)]) / denom;
                g2 += der * der;
            }
        }
        out.values[flat] = std::sqrt(g2);
        for (std::size_t a = naxes; a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

}  // namespace halftrace::fields
