#include "sforge/fields.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "kv_format.hpp"
#include "sforge/samplers.hpp"

namespace sforge {

namespace {

void check_dim(std::size_t got, int want, const char* what) {
    if (static_cast<int>(got) != want)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

} // namespace

VelocityField VelocityField::constant_field(std::vector<double> c) {
    if (c.empty()) throw std::invalid_argument("constant_field: empty vector");
    VelocityField f;
    f.kind = Kind::Constant;
    f.dim = static_cast<int>(c.size());
    f.constant = std::move(c);
    return f;
}

VelocityField VelocityField::identity_linear(int d) {
    if (d < 1) throw std::invalid_argument("identity_linear: dim must be >= 1");
    VelocityField f;
    f.kind = Kind::Linear;
    f.dim = d;
    f.mat.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) f.mat[static_cast<std::size_t>(i * d + i)] = 1.0;
    return f;
}

VelocityField VelocityField::linear(std::vector<double> a, int d) {
    if (d < 1) throw std::invalid_argument("linear: dim must be >= 1");
    check_dim(a.size(), d * d, "linear");
    VelocityField f;
    f.kind = Kind::Linear;
    f.dim = d;
    f.mat = std::move(a);
    return f;
}

VelocityField VelocityField::sine_linear(int d) {
    if (d < 1) throw std::invalid_argument("sine_linear: dim must be >= 1");
    VelocityField f;
    f.kind = Kind::SineLinear;
    f.dim = d;
    return f;
}

VelocityField VelocityField::gaussian(std::vector<double> mean, double s) {
    if (mean.empty()) throw std::invalid_argument("gaussian: empty mean");
    if (!(s >= 0.0)) throw std::invalid_argument("gaussian: scale must be >= 0");
    VelocityField f;
    f.kind = Kind::Gaussian;
    f.dim = static_cast<int>(mean.size());
    f.mu = std::move(mean);
    f.scale = s;
    return f;
}

VelocityField VelocityField::gmm2d(std::vector<MixtureComponent> comps) {
    if (comps.empty()) throw std::invalid_argument("gmm2d: empty mixture");
    double wsum = 0.0;
    for (const auto& c : comps) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("gmm2d: weights must be positive");
        if (!(c.scale >= 0.0)) throw std::invalid_argument("gmm2d: scales must be >= 0");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("gmm2d: weights must sum to 1");
    VelocityField f;
    f.kind = Kind::GaussianMixture2D;
    f.dim = 2;
    f.mixture = std::move(comps);
    return f;
}

VelocityField VelocityField::perturbed(VelocityField base_field, double eta, std::uint64_t seed) {
    if (!(eta >= 0.0)) throw std::invalid_argument("perturbed: eta must be >= 0");
    VelocityField f;
    f.kind = Kind::Perturbed;
    f.dim = base_field.dim;
    f.eta = eta;
    f.perturb_seed = seed;
    CounterRng rng(seed, 7);
    f.sinusoids.reserve(static_cast<std::size_t>(f.dim) * 3);
    for (int i = 0; i < f.dim; ++i) {
        for (int k = 0; k < 3; ++k) {
            VelocityField::Sinusoid sn;
            sn.target = i;
            sn.xcoord = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.dim)));
            sn.amp = 0.5 + rng.uniform();
            sn.kx = -3.0 + 6.0 * rng.uniform();
            sn.kt = 4.0 * rng.uniform();
            sn.phase = 6.283185307179586476925286766559 * rng.uniform();
            f.sinusoids.push_back(sn);
        }
    }
    f.base = std::make_shared<VelocityField>(std::move(base_field));
    return f;
}

std::vector<double> rf_gaussian_velocity(const std::vector<double>& mu, double s,
                                         const std::vector<double>& x, double t) {
    if (s == 0.0 && t >= 1.0)
        throw std::domain_error("rf_gaussian_velocity: singular at t=1 with s=0");
    check_dim(x.size(), static_cast<int>(mu.size()), "rf_gaussian_velocity");
    return detail::rf_gaussian_velocity_t(mu, s, x, t);
}

std::vector<double> rf_gmm2d_velocity(const std::vector<VelocityField::MixtureComponent>& comps,
                                      const std::vector<double>& x, double t) {
    check_dim(x.size(), 2, "rf_gmm2d_velocity");
    return detail::rf_gmm2d_velocity_t(comps, x, t);
}

std::vector<double> vp_gaussian_xbar(const std::vector<double>& mu, double s,
                                     const NoiseSchedule& ns,
                                     const std::vector<double>& x, double t) {
    if (ns.kind != SchedulerKind::VPLinear)
        throw std::domain_error("vp_gaussian_xbar: schedule is not VP");
    check_dim(x.size(), static_cast<int>(mu.size()), "vp_gaussian_xbar");
    VelocityField f = VelocityField::gaussian(mu, s);
    return detail::eval_xbar_impl(f, ns, x, t);
}

Problem builtin_problem(const std::string& name) {
    Problem p;
    p.name = name;
    if (name == "const2d") {
        p.field = VelocityField::constant_field({0.7, -0.3});
    } else if (name == "linear") {
        p.field = VelocityField::identity_linear(1);
    } else if (name == "sine") {
        p.field = VelocityField::sine_linear(1);
    } else if (name == "gauss") {
        p.field = VelocityField::gaussian({0.8, -0.4}, 0.6);
    } else if (name == "gmm2d") {
        p.field = VelocityField::gmm2d({{0.30, {1.2, 0.8}, 0.35},
                                        {0.45, {-1.0, 1.1}, 0.45},
                                        {0.25, {0.2, -1.3}, 0.40}});
    } else if (name == "vpgauss") {
        p.kind = SchedulerKind::VPLinear;
        p.noise = NoiseSchedule::dit();
        p.field = VelocityField::gaussian({0.9, -0.6}, 0.7);
    } else if (name == "vpconst") {
        p.kind = SchedulerKind::VPLinear;
        p.noise = NoiseSchedule::dit();
        p.field = VelocityField::constant_field({0.7, -0.3});
    } else {
        throw std::invalid_argument("builtin_problem: unknown problem '" + name + "'");
    }
    return p;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_problem: cannot open " + path);
    std::string kind = "rf", field, base, name;
    std::vector<double> constant, mu, matrix;
    std::vector<VelocityField::MixtureComponent> comps;
    double scale = 1.0, beta_min = 0.1, beta_max = 20.0, eta = 0.0, t_min = kDefaultVpTmin;
    std::uint64_t perturb_seed = 0;
    int dim = 0;
    std::string line, key, value;
    while (std::getline(in, line)) {
        if (!kv::parse_line(line, key, value)) continue;
        if (key == "name") name = value;
        else if (key == "kind") kind = value;
        else if (key == "field") field = value;
        else if (key == "base") base = value;
        else if (key == "constant") constant = kv::number_list(value, key);
        else if (key == "mu") mu = kv::number_list(value, key);
        else if (key == "matrix") matrix = kv::number_list(value, key);
        else if (key == "scale") scale = std::stod(value);
        else if (key == "beta_min") beta_min = std::stod(value);
        else if (key == "beta_max") beta_max = std::stod(value);
        else if (key == "eta") eta = std::stod(value);
        else if (key == "vp_t_min") t_min = std::stod(value);
        else if (key == "perturb_seed") perturb_seed = std::stoull(value);
        else if (key == "dim") dim = std::stoi(value);
        else if (key == "component") {
            auto nums = kv::number_list(value, key);
            if (nums.size() != 4)
                throw std::runtime_error("load_problem: component needs [w, mux, muy, scale]");
            comps.push_back({nums[0], {nums[1], nums[2]}, nums[3]});
        } else {
            throw std::runtime_error("load_problem: unknown key '" + key + "'");
        }
    }

    Problem p;
    p.name = name.empty() ? path : name;
    if (kind == "rf") {
        p.kind = SchedulerKind::RectifiedFlow;
    } else if (kind == "vp") {
        p.kind = SchedulerKind::VPLinear;
        p.noise = NoiseSchedule::vp_linear(beta_min, beta_max);
        p.vp_t_min = t_min;
    } else {
        throw std::runtime_error("load_problem: kind must be rf or vp, got '" + kind + "'");
    }

    if (field == "constant") p.field = VelocityField::constant_field(constant);
    else if (field == "linear") p.field = VelocityField::linear(matrix, dim);
    else if (field == "sine") p.field = VelocityField::sine_linear(dim > 0 ? dim : 1);
    else if (field == "gaussian") p.field = VelocityField::gaussian(mu, scale);
    else if (field == "gmm2d") p.field = VelocityField::gmm2d(comps);
    else if (field == "perturbed") {
        if (base.empty()) throw std::runtime_error("load_problem: perturbed needs base:");
        p.field = VelocityField::perturbed(builtin_problem(base).field, eta, perturb_seed);
    } else {
        throw std::runtime_error("load_problem: unknown field '" + field + "'");
    }
    return p;
}

Problem resolve_problem(const std::string& name_or_path) {
    try {
        return builtin_problem(name_or_path);
    } catch (const std::invalid_argument&) {
        return load_problem(name_or_path);
    }
}

Trajectory oracle_trajectory(const Problem& p, const std::vector<double>& x0, int steps) {
    if (steps < 1) throw std::invalid_argument("oracle_trajectory: steps must be >= 1");
    const auto grid = uniform_grid(steps);
    if (p.kind == SchedulerKind::RectifiedFlow)
        return euler_sample(p.field, x0, grid);

    // VP first-order exponential integrator on the sampling axis
    Trajectory tr;
    tr.times = grid;
    tr.nfe = steps;
    std::vector<double> x = x0;
    tr.states.push_back(x);
    std::vector<double> vp_t(grid.size()), sigma(grid.size()), omega(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vp_t[i] = vp_time_of_sampling(grid[i], p.vp_t_min);
        auto [a, s] = vp_alpha_sigma(p.noise, vp_t[i]);
        if (s <= 0.0) throw std::domain_error("oracle_trajectory: sigma = 0, raise vp_t_min");
        sigma[i] = s;
        omega[i] = a / s;
    }
    for (int i = 0; i < steps; ++i) {
        auto xbar = eval_xbar(p.field, p.noise, x, vp_t[static_cast<std::size_t>(i)]);
        tr.evals.push_back(xbar);
        double ratio = sigma[static_cast<std::size_t>(i) + 1] / sigma[static_cast<std::size_t>(i)];
        double gain = sigma[static_cast<std::size_t>(i) + 1] *
                      (omega[static_cast<std::size_t>(i) + 1] - omega[static_cast<std::size_t>(i)]);
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = ratio * x[d] + gain * xbar[d];
        detail::check_finite(x, "oracle_trajectory: non-finite state");
        tr.states.push_back(x);
    }
    return tr;
}

std::vector<double> oracle_endpoint(const Problem& p, const std::vector<double>& x0, int steps) {
    return oracle_trajectory(p, x0, steps).states.back();
}

} // namespace sforge
