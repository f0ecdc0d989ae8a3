#include "antfungus/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace antfungus {

double BiomassState::norm() const { return std::hypot(A, F); }

bool BiomassState::finite() const { return std::isfinite(A) && std::isfinite(F); }

void LaborAllocation::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("labor allocation: p must lie in [0, 1]");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::invalid_argument("labor allocation: q must lie in [0, 1]");
    }
}

double labor_coefficient(const LaborAllocation& alloc) {
    alloc.validate();
    return alloc.p * alloc.p * alloc.q * (1.0 - alloc.q);
}

ModelParams ModelParams::checked(double r_a, double r_f, double r_c, double d_a,
                                 double d_f, double b, double a,
                                 std::optional<LaborAllocation> labor) {
    ModelParams params{r_a, r_f, r_c, d_a, d_f, b, a, std::move(labor)};
    params.validate();
    return params;
}

void ModelParams::validate() const {
    auto require_positive = [](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) {
            throw std::invalid_argument(std::string("model params: ") + name +
                                        " must be strictly positive and finite");
        }
    };
    require_positive(r_a, "r_a");
    require_positive(r_f, "r_f");
    require_positive(r_c, "r_c");
    require_positive(d_a, "d_a");
    require_positive(d_f, "d_f");
    require_positive(b, "b");
    if (!(std::isfinite(a) && a > 0.0 && a < 0.25)) {
        throw std::invalid_argument("model params: a must lie strictly inside (0, 0.25)");
    }
    if (labor) {
        labor->validate();
        const double derived = labor_coefficient(*labor);
        if (std::abs(derived - a) > 1e-12) {
            throw std::invalid_argument(
                "model params: a disagrees with p^2 q (1-q) beyond 1e-12");
        }
    }
}

bool AttractingBox::contains(const BiomassState& s, double inflate) const {
    return s.A >= -inflate && s.A <= A_max + inflate &&
           s.F >= -inflate && s.F <= F_max + inflate;
}

BiomassState vector_field(const ModelParams& params, const BiomassState& state) {
    if (!state.finite()) {
        throw std::domain_error("vector_field: non-finite state");
    }
    const double A = state.A;
    const double F = state.F;
    const double aA2 = params.a * A * A;
    const double dA = (params.r_a * F - params.d_a * A) * A;
    const double dF =
        (params.r_f * aA2 / (params.b + aA2) - params.d_f * F - params.r_c * A) * F;
    if (!std::isfinite(dA) || !std::isfinite(dF)) {
        throw std::domain_error("vector_field: non-finite derivative");
    }
    return {dA, dF};
}

Eigen::Matrix2d jacobian(const ModelParams& params, const BiomassState& state) {
    if (!state.finite()) {
        throw std::domain_error("jacobian: non-finite state");
    }
    const double A = state.A;
    const double F = state.F;
    const double denom = params.b + params.a * A * A;
    const double g = params.r_f * params.a * A * A / denom;                    // fungus response
    const double dg = 2.0 * params.r_f * params.a * params.b * A / (denom * denom);

    Eigen::Matrix2d j;
    j(0, 0) = params.r_a * F - 2.0 * params.d_a * A;
    j(0, 1) = params.r_a * A;
    j(1, 0) = (dg - params.r_c) * F;
    j(1, 1) = g - 2.0 * params.d_f * F - params.r_c * A;
    return j;
}

double coexistence_threshold(const ModelParams& params) {
    const double ratio = (params.r_c * params.r_a + params.d_f * params.d_a) /
                         (params.r_a * params.r_f);
    return 4.0 * params.b * ratio * ratio;
}

AttractingBox attracting_box(const ModelParams& params) {
    return {params.r_a * params.r_f / (params.d_a * params.d_f),
            params.r_f / params.d_f};
}

namespace {

constexpr const char* kKeys[] = {"r_a", "r_f", "r_c", "d_a", "d_f", "b", "a", "p", "q"};

bool known_key(const std::string& key) {
    for (const char* k : kKeys) {
        if (key == k) return true;
    }
    return false;
}

}  // namespace

ModelParams read_params(std::istream& in) {
    std::map<std::string, double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("parameter file line " + std::to_string(lineno) +
                                        ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (!known_key(key)) {
            throw std::invalid_argument("parameter file line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
        if (values.count(key)) {
            throw std::invalid_argument("parameter file line " + std::to_string(lineno) +
                                        ": duplicate key '" + key + "'");
        }
        std::string value = line.substr(eq + 1);
        std::size_t pos = 0;
        double parsed = 0.0;
        try {
            parsed = std::stod(value, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("parameter file line " + std::to_string(lineno) +
                                        ": bad numeric value for '" + key + "'");
        }
        const auto rest = value.find_first_not_of(" \t\r", pos);
        if (rest != std::string::npos) {
            throw std::invalid_argument("parameter file line " + std::to_string(lineno) +
                                        ": trailing junk after value for '" + key + "'");
        }
        values[key] = parsed;
    }

    for (const char* k : {"r_a", "r_f", "r_c", "d_a", "d_f", "b"}) {
        if (!values.count(k)) {
            throw std::invalid_argument(std::string("parameter file: missing key '") + k + "'");
        }
    }
    const bool has_p = values.count("p");
    const bool has_q = values.count("q");
    if (has_p != has_q) {
        throw std::invalid_argument("parameter file: p and q must be given together");
    }

    std::optional<LaborAllocation> labor;
    double a = 0.0;
    if (has_p) {
        labor = LaborAllocation{values["p"], values["q"]};
        labor->validate();
        a = values.count("a") ? values["a"] : labor_coefficient(*labor);
    } else if (values.count("a")) {
        a = values["a"];
    } else {
        throw std::invalid_argument("parameter file: need either a or the pair (p, q)");
    }

    return ModelParams::checked(values["r_a"], values["r_f"], values["r_c"],
                                values["d_a"], values["d_f"], values["b"], a, labor);
}

ModelParams read_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open parameter file: " + path);
    }
    return read_params(in);
}

void write_params(std::ostream& out, const ModelParams& params) {
    std::ostringstream os;
    os.precision(17);
    os << "r_a = " << params.r_a << "\n"
       << "r_f = " << params.r_f << "\n"
       << "r_c = " << params.r_c << "\n"
       << "d_a = " << params.d_a << "\n"
       << "d_f = " << params.d_f << "\n"
       << "b = " << params.b << "\n"
       << "a = " << params.a << "\n";
    if (params.labor) {
        os << "p = " << params.labor->p << "\n"
           << "q = " << params.labor->q << "\n";
    }
    out << os.str();
}

}  // namespace antfungus
