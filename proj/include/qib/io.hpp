#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qib/channels.hpp"
#include "qib/classical_ib.hpp"
#include "qib/matrix.hpp"
#include "qib/presets.hpp"
#include "qib/states.hpp"

namespace qib {

using json = nlohmann::json;

// Matrices travel as row-major arrays of [re, im] pairs.
inline json matrix_to_json(const ComplexMatrix& m) {
    json arr = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            arr.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    return arr;
}

inline ComplexMatrix matrix_from_json(const json& arr, std::size_t rows, std::size_t cols) {
    if (!arr.is_array() || arr.size() != rows * cols)
        throw std::invalid_argument("matrix json: wrong entry count");
    ComplexMatrix m(rows, cols);
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const json& e = arr[k++];
            if (!e.is_array() || e.size() != 2)
                throw std::invalid_argument("matrix json: entries must be [re, im] pairs");
            m(i, j) = cxd(e[0].get<double>(), e[1].get<double>());
        }
    return m;
}

inline json channel_to_json(const KrausChannel& n) {
    json j;
    j["d_in"] = n.d_in;
    j["d_out"] = n.d_out;
    json ops = json::array();
    for (const auto& k : n.kraus) ops.push_back(matrix_to_json(k));
    j["kraus"] = ops;
    return j;
}

inline KrausChannel channel_from_json(const json& j) {
    KrausChannel n;
    n.d_in = j.at("d_in").get<std::size_t>();
    n.d_out = j.at("d_out").get<std::size_t>();
    for (const auto& op : j.at("kraus")) n.kraus.push_back(matrix_from_json(op, n.d_out, n.d_in));
    n.require_valid();
    return n;
}

inline json choi_to_json(const ChoiMatrix& psi) {
    json j;
    j["d_in"] = psi.d_in;
    j["d_out"] = psi.d_out;
    j["choi"] = matrix_to_json(psi.mat);
    return j;
}

inline ChoiMatrix choi_from_json(const json& j) {
    ChoiMatrix psi;
    psi.d_in = j.at("d_in").get<std::size_t>();
    psi.d_out = j.at("d_out").get<std::size_t>();
    const std::size_t dim = psi.d_in * psi.d_out;
    psi.mat = matrix_from_json(j.at("choi"), dim, dim);
    return psi;
}

// A state spec is either a named preset with parameters or an explicit
// matrix with factor dimensions.
inline BipartiteState state_from_spec_json(const json& j) {
    if (j.contains("preset")) {
        const json& p = j.at("preset");
        const std::string name = p.at("name").get<std::string>();
        std::vector<double> params;
        if (p.contains("params")) params = p.at("params").get<std::vector<double>>();
        if (name == "classical") {
            if (params.size() != 4)
                throw std::invalid_argument("preset classical needs 4 probabilities");
            return classical_state(params[0], params[1], params[2], params[3]);
        }
        if (name == "bell_mix") {
            if (!params.empty()) throw std::invalid_argument("preset bell_mix takes no parameters");
            return bell_mix_state();
        }
        if (name == "vw_mix") {
            if (params.size() != 2) throw std::invalid_argument("preset vw_mix needs 2 probabilities");
            return vw_mix_state(params[0], params[1]);
        }
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    if (j.contains("dims") && j.contains("matrix")) {
        const std::size_t dx = j.at("dims").at("x").get<std::size_t>();
        const std::size_t dy = j.at("dims").at("y").get<std::size_t>();
        ComplexMatrix m = matrix_from_json(j.at("matrix"), dx * dy, dx * dy);
        return BipartiteState(std::move(m), SubsystemDims{{Label::x, dx}, {Label::y, dy}});
    }
    throw std::invalid_argument("state spec: expected 'preset' or 'dims' + 'matrix'");
}

inline json state_spec_to_json(const std::string& preset, const std::vector<double>& params) {
    json j;
    j["preset"]["name"] = preset;
    if (!params.empty()) j["preset"]["params"] = params;
    return j;
}

// {"px_y": [[...], ...]} row-major |X| x |Y|
inline JointDistribution joint_from_json(const json& j) {
    const json& rows = j.at("px_y");
    if (!rows.is_array() || rows.empty()) throw std::invalid_argument("px_y: expected nested arrays");
    const std::size_t nx = rows.size();
    const std::size_t ny = rows[0].size();
    std::vector<double> p;
    p.reserve(nx * ny);
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != ny)
            throw std::invalid_argument("px_y: ragged rows");
        for (const auto& v : row) p.push_back(v.get<double>());
    }
    return JointDistribution(nx, ny, std::move(p));
}

inline json joint_to_json(const JointDistribution& pxy) {
    json rows = json::array();
    for (std::size_t x = 0; x < pxy.nx(); ++x) {
        json row = json::array();
        for (std::size_t y = 0; y < pxy.ny(); ++y) row.push_back(pxy(x, y));
        rows.push_back(row);
    }
    return json{{"px_y", rows}};
}

inline json classical_channel_to_json(const ClassicalChannel& q) {
    json cols = json::array();
    for (std::size_t x = 0; x < q.n_in(); ++x) {
        json col = json::array();
        for (std::size_t xt = 0; xt < q.n_out(); ++xt) col.push_back(q(xt, x));
        cols.push_back(col);
    }
    return json{{"n_in", q.n_in()}, {"n_out", q.n_out()}, {"p_xt_given_x", cols}};
}

} // namespace qib
