#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "san/errors.hpp"
#include "san/harness.hpp"

namespace san {

namespace {

template <class E>
E parse_enum(const std::string& s, const std::vector<std::pair<std::string, E>>& table, const char* what) {
    for (const auto& [name, v] : table)
        if (s == name) return v;
    throw ContractError(std::string("unknown ") + what + ": " + s);
}

template <class E>
std::string enum_name(E v, const std::vector<std::pair<std::string, E>>& table) {
    for (const auto& [name, x] : table)
        if (x == v) return name;
    return "?";
}

const std::vector<std::pair<std::string, Method>> kMethods{
    {"san", Method::San}, {"vb-gmm", Method::VbGmm}, {"vae", Method::Vae}, {"lds-em", Method::LdsEm}};
const std::vector<std::pair<std::string, Optimizer>> kOptimizers{
    {"sgd", Optimizer::Sgd}, {"adagrad", Optimizer::Adagrad}, {"van", Optimizer::Van}};
const std::vector<std::pair<std::string, ThetaNnMode>> kThetaNn{{"point", ThetaNnMode::Point},
                                                                 {"bayes", ThetaNnMode::Bayes}};
const std::vector<std::pair<std::string, PgmMessage>> kMessages{{"vb", PgmMessage::Vb}, {"sin", PgmMessage::Sin}};
const std::vector<std::pair<std::string, nnet::Act>> kActivations{{"tanh", nnet::Act::Tanh},
                                                                  {"softplus", nnet::Act::Softplus}};

std::string num(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ContractError("not a boolean: " + s);
}

}  // namespace

std::string method_name(Method m) { return enum_name(m, kMethods); }
Method parse_method(const std::string& s) { return parse_enum(s, kMethods, "method"); }
std::string optimizer_name(Optimizer o) { return enum_name(o, kOptimizers); }
Optimizer parse_optimizer(const std::string& s) { return parse_enum(s, kOptimizers, "optimizer"); }
std::string theta_nn_name(ThetaNnMode t) { return enum_name(t, kThetaNn); }
ThetaNnMode parse_theta_nn(const std::string& s) { return parse_enum(s, kThetaNn, "theta-nn mode"); }
std::string pgm_message_name(PgmMessage p) { return enum_name(p, kMessages); }
PgmMessage parse_pgm_message(const std::string& s) { return parse_enum(s, kMessages, "pgm message"); }
std::string activation_name(nnet::Act a) { return enum_name(a, kActivations); }
nnet::Act parse_activation(const std::string& s) { return parse_enum(s, kActivations, "activation"); }

std::string model_kind_name(PriorKind k) { return prior_name(k); }
PriorKind parse_model_kind(const std::string& s) {
    return parse_prior(s.rfind("latent-", 0) == 0 ? s : "latent-" + s);
}

void TrainConfig::validate() const {
    require(components >= 1, "config: components must be at least 1");
    require(latent_dim >= 1, "config: latent-dim must be positive");
    for (int h : hidden) require(h >= 1, "config: hidden widths must be positive");
    require(beta1 >= 0 && beta1 <= 1, "config: beta1 must lie in [0, 1]");
    require(beta2 >= 0 && beta3 >= 0, "config: beta2 and beta3 must be nonnegative");
    require(theta_nn != ThetaNnMode::Bayes || beta2 < 1, "config: bayes theta-nn needs beta2 < 1");
    require(batch >= 1 && iterations >= 0 && eval_every >= 1 && eval_samples >= 1 && eval_max_units >= 1,
            "config: batch, eval-every, eval-samples and eval-max-units must be positive");
    require(decoder_init_var >= 0, "config: decoder-init-var must be nonnegative");
    require(dof > 0 && van_init_var > 0 && bayes_prior_var > 0 && bayes_init_var > 0,
            "config: dof and variances must be positive");
    for (int t : taus) require(t >= 0, "config: taus must be nonnegative");
    require(!fixed_prior || model == PriorKind::Gmm, "config: fixed-prior needs the latent-gmm model");
    require(method != Method::LdsEm || data.kind != "pinwheel", "config: lds-em needs sequence data");
}

std::map<std::string, std::string> config_to_map(const TrainConfig& c) {
    std::map<std::string, std::string> m;
    m["method"] = method_name(c.method);
    m["model"] = model_kind_name(c.model);
    m["components"] = std::to_string(c.components);
    m["latent-dim"] = std::to_string(c.latent_dim);
    m["hidden"] = join_ints(c.hidden);
    m["activation"] = activation_name(c.activation);
    m["beta1"] = num(c.beta1);
    m["beta2"] = num(c.beta2);
    m["beta3"] = num(c.beta3);
    m["batch"] = std::to_string(c.batch);
    m["iterations"] = std::to_string(c.iterations);
    m["seed"] = std::to_string(c.seed);
    m["optimizer"] = optimizer_name(c.optimizer);
    m["theta-nn"] = theta_nn_name(c.theta_nn);
    m["pgm-message"] = pgm_message_name(c.pgm_message);
    m["sequential"] = c.sequential ? "true" : "false";
    m["fixed-prior"] = c.fixed_prior ? "true" : "false";
    m["dof"] = num(c.dof);
    m["decoder-init-var"] = num(c.decoder_init_var);
    m["van-init-var"] = num(c.van_init_var);
    m["bayes-prior-var"] = num(c.bayes_prior_var);
    m["bayes-init-var"] = num(c.bayes_init_var);
    m["eval-every"] = std::to_string(c.eval_every);
    m["eval-samples"] = std::to_string(c.eval_samples);
    m["eval-max-units"] = std::to_string(c.eval_max_units);
    m["taus"] = join_ints(c.taus);
    m["record-wallclock"] = c.record_wallclock ? "true" : "false";
    const DataConfig& d = c.data;
    m["data"] = d.kind;
    m["data-path"] = d.path;
    m["n-per-arm"] = std::to_string(d.n_per_arm);
    m["arms"] = std::to_string(d.arms);
    m["radial-std"] = num(d.radial_std);
    m["tangential-std"] = num(d.tangential_std);
    m["rate"] = num(d.rate);
    m["n-seq"] = std::to_string(d.n_seq);
    m["t-len"] = std::to_string(d.t_len);
    m["width"] = std::to_string(d.width);
    m["dot-std"] = num(d.dot_std);
    m["speed"] = num(d.speed);
    m["outlier-fraction"] = num(d.outlier_fraction);
    m["outlier-std"] = num(d.outlier_std);
    m["train-frac"] = num(d.train_frac);
    m["standardize"] = d.standardize ? "true" : "false";
    m["data-seed"] = std::to_string(d.seed);
    return m;
}

TrainConfig config_from_map(const std::map<std::string, std::string>& kv) {
    TrainConfig c;
    DataConfig& d = c.data;
    for (const auto& [k, v] : kv) {
        try {
            if (k == "method") c.method = parse_method(v);
            else if (k == "model") c.model = parse_model_kind(v);
            else if (k == "components") c.components = std::stoi(v);
            else if (k == "latent-dim") c.latent_dim = std::stoi(v);
            else if (k == "hidden") c.hidden = split_ints(v);
            else if (k == "activation") c.activation = parse_activation(v);
            else if (k == "beta1") c.beta1 = std::stod(v);
            else if (k == "beta2") c.beta2 = std::stod(v);
            else if (k == "beta3") c.beta3 = std::stod(v);
            else if (k == "batch") c.batch = std::stoi(v);
            else if (k == "iterations") c.iterations = std::stoi(v);
            else if (k == "seed") c.seed = std::stoull(v);
            else if (k == "optimizer") c.optimizer = parse_optimizer(v);
            else if (k == "theta-nn") c.theta_nn = parse_theta_nn(v);
            else if (k == "pgm-message") c.pgm_message = parse_pgm_message(v);
            else if (k == "sequential") c.sequential = parse_bool(v);
            else if (k == "fixed-prior") c.fixed_prior = parse_bool(v);
            else if (k == "dof") c.dof = std::stod(v);
            else if (k == "decoder-init-var") c.decoder_init_var = std::stod(v);
            else if (k == "van-init-var") c.van_init_var = std::stod(v);
            else if (k == "bayes-prior-var") c.bayes_prior_var = std::stod(v);
            else if (k == "bayes-init-var") c.bayes_init_var = std::stod(v);
            else if (k == "eval-every") c.eval_every = std::stoi(v);
            else if (k == "eval-samples") c.eval_samples = std::stoi(v);
            else if (k == "eval-max-units") c.eval_max_units = std::stoi(v);
            else if (k == "taus") c.taus = split_ints(v);
            else if (k == "record-wallclock") c.record_wallclock = parse_bool(v);
            else if (k == "data") d.kind = v;
            else if (k == "data-path") d.path = v;
            else if (k == "n-per-arm") d.n_per_arm = std::stoi(v);
            else if (k == "arms") d.arms = std::stoi(v);
            else if (k == "radial-std") d.radial_std = std::stod(v);
            else if (k == "tangential-std") d.tangential_std = std::stod(v);
            else if (k == "rate") d.rate = std::stod(v);
            else if (k == "n-seq") d.n_seq = std::stoi(v);
            else if (k == "t-len") d.t_len = std::stoi(v);
            else if (k == "width") d.width = std::stoi(v);
            else if (k == "dot-std") d.dot_std = std::stod(v);
            else if (k == "speed") d.speed = std::stod(v);
            else if (k == "outlier-fraction") d.outlier_fraction = std::stod(v);
            else if (k == "outlier-std") d.outlier_std = std::stod(v);
            else if (k == "train-frac") d.train_frac = std::stod(v);
            else if (k == "standardize") d.standardize = parse_bool(v);
            else if (k == "data-seed") d.seed = std::stoull(v);
            else throw ContractError("unknown config key: " + k);
        } catch (const std::invalid_argument&) {
            throw ContractError("config: bad value for " + k + ": " + v);
        } catch (const std::out_of_range&) {
            throw ContractError("config: value out of range for " + k + ": " + v);
        }
    }
    return c;
}

Dataset make_dataset(const DataConfig& cfg) {
    Dataset ds;
    if (cfg.kind == "pinwheel") {
        ds = pinwheel(cfg.n_per_arm, cfg.arms, cfg.radial_std, cfg.tangential_std, cfg.rate, cfg.seed);
    } else if (cfg.kind == "dots") {
        ds = dot_sequences(cfg.n_seq, cfg.t_len, cfg.width, cfg.dot_std, cfg.speed, cfg.seed);
    } else if (cfg.kind == "file") {
        std::ifstream meta(cfg.path + ".meta");
        ds = meta ? load_dataset(cfg.path) : load_delimited(cfg.path);
    } else {
        throw ContractError("unknown data kind: " + cfg.kind);
    }
    ds = split(ds, cfg.train_frac, cfg.seed + 1);
    if (cfg.outlier_fraction > 0) ds = inject_outliers(ds, cfg.outlier_fraction, cfg.outlier_std, cfg.seed + 2);
    if (cfg.standardize) standardize(ds);
    return ds;
}

// ---- checkpoint conversion ----

namespace {

std::vector<double> from_eigen(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

Eigen::MatrixXd to_matrix(const std::vector<double>& v, int r, int c) {
    require(static_cast<int>(v.size()) == r * c, "checkpoint: matrix size mismatch");
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = v[static_cast<std::size_t>(i * c + j)];
    return m;
}

const std::vector<double>& array(const Checkpoint& c, const std::string& name) {
    auto it = c.arrays.find(name);
    require(it != c.arrays.end(), "checkpoint: missing array " + name);
    return it->second;
}

void assign(std::vector<double>& dst, const std::vector<double>& src, const std::string& name) {
    require(dst.size() == src.size(), "checkpoint: size mismatch for " + name);
    dst = src;
}

}  // namespace

Checkpoint to_checkpoint(const TrainState& s) {
    Checkpoint c;
    c.meta = config_to_map(s.cfg);
    c.meta["state.data-dim"] = std::to_string(s.data_dim);
    c.meta["state.iteration"] = std::to_string(s.iteration);
    c.arrays["decoder"] = s.model.decoder.params;
    c.arrays["theta_pgm"] = s.model.theta_pgm;
    c.arrays["encoder"] = s.sin.encoder.params;
    c.arrays["phi_pgm"] = s.sin.phi_pgm;
    if (s.q.components() > 0) {
        const Eigen::VectorXd f = s.q.flat();
        c.arrays["q"] = std::vector<double>(f.data(), f.data() + f.size());
    }
    c.arrays["ada_nn"] = s.ada_nn.accum;
    c.arrays["ada_pgm"] = s.ada_pgm.accum;
    c.arrays["ada_phi"] = s.ada_phi.accum;
    c.arrays["van_nn_mu"] = s.van_nn.mu;
    c.arrays["van_nn_sigma2"] = s.van_nn.sigma2;
    c.arrays["van_phi_mu"] = s.van_phi.mu;
    c.arrays["van_phi_sigma2"] = s.van_phi.sigma2;
    c.arrays["bayes_mu"] = s.bayes.mu;
    c.arrays["bayes_sigma2"] = s.bayes.sigma2;
    if (s.lds.A.size() > 0) {
        c.arrays["lds_A"] = from_eigen(s.lds.A);
        c.arrays["lds_Q"] = from_eigen(s.lds.Q);
        c.arrays["lds_C"] = from_eigen(s.lds.C);
        c.arrays["lds_b"] = from_eigen(s.lds.b);
        c.arrays["lds_mu1"] = from_eigen(s.lds.mu1);
        c.arrays["lds_sigma1"] = from_eigen(s.lds.sigma1);
        c.arrays["lds_R"] = from_eigen(s.lds.R.at(0));
    }
    return c;
}

TrainState from_checkpoint(const Checkpoint& c) {
    std::map<std::string, std::string> cfg_map;
    for (const auto& [k, v] : c.meta)
        if (k.rfind("state.", 0) != 0) cfg_map[k] = v;
    const TrainConfig cfg = config_from_map(cfg_map);
    require(c.meta.count("state.data-dim") && c.meta.count("state.iteration"), "checkpoint: missing state metadata");
    TrainState s = init_state(cfg, std::stoi(c.meta.at("state.data-dim")));
    s.iteration = std::stoll(c.meta.at("state.iteration"));
    assign(s.model.decoder.params, array(c, "decoder"), "decoder");
    assign(s.model.theta_pgm, array(c, "theta_pgm"), "theta_pgm");
    assign(s.sin.encoder.params, array(c, "encoder"), "encoder");
    assign(s.sin.phi_pgm, array(c, "phi_pgm"), "phi_pgm");
    if (s.q.components() > 0) {
        const auto& q = array(c, "q");
        require(static_cast<Eigen::Index>(q.size()) == s.q.flat().size(), "checkpoint: size mismatch for q");
        s.q.set_flat(Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size())));
    }
    s.ada_nn.accum = array(c, "ada_nn");
    s.ada_pgm.accum = array(c, "ada_pgm");
    s.ada_phi.accum = array(c, "ada_phi");
    s.van_nn.mu = array(c, "van_nn_mu");
    s.van_nn.sigma2 = array(c, "van_nn_sigma2");
    s.van_phi.mu = array(c, "van_phi_mu");
    s.van_phi.sigma2 = array(c, "van_phi_sigma2");
    s.bayes.mu = array(c, "bayes_mu");
    s.bayes.sigma2 = array(c, "bayes_sigma2");
    if (c.arrays.count("lds_A")) {
        const int d = cfg.latent_dim, dd = s.data_dim;
        s.lds.A = to_matrix(array(c, "lds_A"), d, d);
        s.lds.Q = to_matrix(array(c, "lds_Q"), d, d);
        s.lds.C = to_matrix(array(c, "lds_C"), dd, d);
        s.lds.b = to_matrix(array(c, "lds_b"), dd, 1);
        s.lds.mu1 = to_matrix(array(c, "lds_mu1"), d, 1);
        s.lds.sigma1 = to_matrix(array(c, "lds_sigma1"), d, d);
        s.lds.R = {to_matrix(array(c, "lds_R"), dd, dd)};
    }
    return s;
}

// ---- metrics log ----

std::string metrics_header(const std::vector<int>& taus) {
    std::string h = "iteration,train_bound,val_bound,test_bound,imputation_mse,recon_mse";
    for (int t : taus) h += ",mae_tau" + std::to_string(t);
    return h + ",wall_seconds";
}

std::string metrics_line(const MetricsRow& r, const std::vector<int>& taus) {
    std::string line = std::to_string(r.iteration);
    for (double v : {r.train_bound, r.val_bound, r.test_bound, r.imputation_mse, r.recon_mse}) line += "," + num(v);
    for (int t : taus) {
        auto it = r.mae.find(t);
        line += "," + num(it == r.mae.end() ? NAN : it->second);
    }
    return line + "," + num(r.wall_seconds);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "cannot open metrics log: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "metrics log is empty: " + path);
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    std::vector<MetricsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(lineno, "metrics log: bad number " + cell);
            }
        }
        if (vals.size() != cols.size()) throw ParseError(lineno, "metrics log: wrong column count");
        MetricsRow r;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const std::string& c = cols[i];
            const double v = vals[i];
            if (c == "iteration") r.iteration = static_cast<std::int64_t>(v);
            else if (c == "train_bound") r.train_bound = v;
            else if (c == "val_bound") r.val_bound = v;
            else if (c == "test_bound") r.test_bound = v;
            else if (c == "imputation_mse") r.imputation_mse = v;
            else if (c == "recon_mse") r.recon_mse = v;
            else if (c == "wall_seconds") r.wall_seconds = v;
            else if (c.rfind("mae_tau", 0) == 0) r.mae[std::stoi(c.substr(7))] = v;
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace san
