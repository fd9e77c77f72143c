#include "san/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "san/errors.hpp"
#include "san/rng.hpp"

namespace san {

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';') {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::size_t> Dataset::seq_offsets() const {
    std::vector<std::size_t> off(seq_lengths.size());
    std::size_t acc = 0;
    for (std::size_t i = 0; i < seq_lengths.size(); ++i) {
        off[i] = acc;
        acc += seq_lengths[i];
    }
    return off;
}

Rows Dataset::unit(std::size_t i) const {
    require(i < num_units(), "dataset: unit index out of range");
    if (!sequential()) return {rows[i]};
    std::size_t off = 0;
    for (std::size_t s = 0; s < i; ++s) off += seq_lengths[s];
    return Rows(rows.begin() + static_cast<std::ptrdiff_t>(off),
                rows.begin() + static_cast<std::ptrdiff_t>(off + seq_lengths[i]));
}

Rows Dataset::gather_rows(const std::vector<std::size_t>& units) const {
    Rows out;
    if (!sequential()) {
        for (std::size_t i : units) out.push_back(rows.at(i));
        return out;
    }
    const auto off = seq_offsets();
    for (std::size_t i : units)
        for (std::size_t t = 0; t < seq_lengths.at(i); ++t) out.push_back(rows[off[i] + t]);
    return out;
}

std::vector<Rows> Dataset::gather_units(const std::vector<std::size_t>& units) const {
    std::vector<Rows> out;
    out.reserve(units.size());
    if (!sequential()) {
        for (std::size_t i : units) out.push_back({rows.at(i)});
        return out;
    }
    const auto off = seq_offsets();
    for (std::size_t i : units)
        out.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(off.at(i)),
                         rows.begin() + static_cast<std::ptrdiff_t>(off[i] + seq_lengths[i]));
    return out;
}

Dataset pinwheel(int n_per_arm, int arms, double radial_std, double tangential_std, double rate, std::uint64_t seed) {
    require(arms >= 1, "pinwheel: arms must be at least 1");
    require(n_per_arm >= 1, "pinwheel: n_per_arm must be positive");
    Rng rng(seed);
    Dataset ds;
    for (int a = 0; a < arms; ++a) {
        const double base = 2.0 * std::numbers::pi * a / arms;
        for (int i = 0; i < n_per_arm; ++i) {
            const double r = 1.0 + radial_std * std_normal(rng);
            const double t = tangential_std * std_normal(rng);
            const double ang = base + rate * std::exp(r);
            const double c = std::cos(ang), s = std::sin(ang);
            ds.rows.push_back({r * c - t * s, r * s + t * c});
            ds.labels.push_back(a);
        }
    }
    ds.provenance = {{"generator", "pinwheel"},
                     {"seed", std::to_string(seed)},
                     {"n_per_arm", std::to_string(n_per_arm)},
                     {"arms", std::to_string(arms)},
                     {"radial_std", num(radial_std)},
                     {"tangential_std", num(tangential_std)},
                     {"rate", num(rate)}};
    return ds;
}

Dataset dot_sequences(int n_seq, int t_len, int width, double dot_std, double speed, std::uint64_t seed) {
    require(t_len >= 2, "dot_sequences: T must be at least 2");
    require(n_seq >= 1 && width >= 1 && dot_std > 0.0, "dot_sequences: invalid size or width");
    Rng rng(seed);
    Dataset ds;
    const double w = static_cast<double>(width);
    for (int s = 0; s < n_seq; ++s) {
        double pos = w * uniform01(rng);
        double vel = uniform01(rng) < 0.5 ? -speed : speed;
        for (int t = 0; t < t_len; ++t) {
            if (t > 0) {
                pos += vel;
                // Reflect until inside; a step can exceed the width only for huge speeds.
                while (pos < 0.0 || pos > w) {
                    if (pos < 0.0) pos = -pos;
                    if (pos > w) pos = 2.0 * w - pos;
                    vel = -vel;
                }
            }
            Row frame(static_cast<std::size_t>(width));
            double mass = 0.0;
            for (int i = 0; i < width; ++i) {
                const double z = (i + 0.5 - pos) / dot_std;
                frame[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
                mass += frame[static_cast<std::size_t>(i)];
            }
            for (double& v : frame) v /= mass;
            ds.rows.push_back(std::move(frame));
            ds.latent.push_back({pos});
            ds.labels.push_back(t);
        }
        ds.seq_lengths.push_back(static_cast<std::size_t>(t_len));
    }
    ds.provenance = {{"generator", "dot_sequences"}, {"seed", std::to_string(seed)},
                     {"n_seq", std::to_string(n_seq)},  {"T", std::to_string(t_len)},
                     {"width", std::to_string(width)},  {"dot_std", num(dot_std)},
                     {"speed", num(speed)}};
    return ds;
}

Dataset load_delimited(const std::string& path, bool has_labels, int label_column) {
    const std::string text = read_file(path);
    Dataset ds;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::size_t width = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cells = tokenize(line);
        if (cells.empty() || cells[0][0] == '#') continue;
        std::vector<double> vals(cells.size());
        std::size_t numeric = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) numeric += parse_double(cells[i], vals[i]) ? 1 : 0;
        if (first_content && numeric == 0) {
            first_content = false;
            continue;
        }
        first_content = false;
        if (numeric != cells.size()) throw ParseError(line_no, "non-numeric cell");
        if (width == 0) width = cells.size();
        if (cells.size() != width) throw ParseError(line_no, "ragged row");
        if (has_labels) {
            const int col = label_column < 0 ? static_cast<int>(width) + label_column : label_column;
            if (col < 0 || col >= static_cast<int>(width)) throw ParseError(line_no, "label column out of range");
            const double lab = vals[static_cast<std::size_t>(col)];
            if (lab != std::floor(lab)) throw ParseError(line_no, "label is not an integer");
            ds.labels.push_back(static_cast<int>(lab));
            vals.erase(vals.begin() + col);
        }
        ds.rows.push_back(std::move(vals));
    }
    if (ds.rows.empty()) throw ParseError(line_no, "no data rows");
    ds.provenance = {{"source", path}, {"fnv1a", std::to_string(fnv1a(text))}};
    return ds;
}

Dataset inject_outliers(const Dataset& ds, double fraction, double outlier_std, std::uint64_t seed) {
    require(fraction >= 0.0 && fraction < 1.0, "inject_outliers: fraction must lie in [0, 1)");
    require(outlier_std > 0.0, "inject_outliers: outlier_std must be positive");
    Dataset out = ds;
    if (out.outlier.size() != out.rows.size()) out.outlier.assign(out.rows.size(), 0);
    std::vector<std::size_t> pool;
    if (!ds.train.empty()) {
        if (ds.sequential()) {
            const auto off = ds.seq_offsets();
            for (std::size_t u : ds.train)
                for (std::size_t t = 0; t < ds.seq_lengths[u]; ++t) pool.push_back(off[u] + t);
        } else {
            pool = ds.train;
        }
    } else {
        pool.resize(ds.rows.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
    }
    const std::size_t count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool.size())));
    Rng rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
        Row& r = out.rows[pool[i]];
        for (double& v : r) v = outlier_std * std_normal(rng);
        out.outlier[pool[i]] = 1;
    }
    out.provenance["outlier_fraction"] = num(fraction);
    out.provenance["outlier_std"] = num(outlier_std);
    out.provenance["outlier_seed"] = std::to_string(seed);
    return out;
}

Dataset split(const Dataset& ds, double train_frac, std::uint64_t seed) {
    require(train_frac > 0.0 && train_frac <= 1.0, "split: train fraction must lie in (0, 1]");
    const std::size_t n = ds.num_units();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
    const std::size_t n_val = (n - n_train) / 2;
    Dataset out = ds;
    out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                   idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    out.provenance["split_seed"] = std::to_string(seed);
    out.provenance["train_frac"] = num(train_frac);
    return out;
}

ColumnStats standardize(Dataset& ds) {
    require(!ds.train.empty(), "standardize: dataset has no training split");
    const Rows train = ds.gather_rows(ds.train);
    const std::size_t d = ds.dim();
    ColumnStats st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double n = static_cast<double>(train.size());
    for (const Row& r : train)
        for (std::size_t j = 0; j < d; ++j) st.mean[j] += r[j] / n;
    for (const Row& r : train)
        for (std::size_t j = 0; j < d; ++j) st.sd[j] += (r[j] - st.mean[j]) * (r[j] - st.mean[j]) / n;
    for (double& s : st.sd) s = s > 0.0 ? std::sqrt(s) : 1.0;
    for (Row& r : ds.rows)
        for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - st.mean[j]) / st.sd[j];
    return st;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ostringstream os;
    os.precision(17);
    const std::size_t d = ds.dim();
    for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << "y" << j;
    const bool labels = !ds.labels.empty();
    if (labels) os << ",label";
    if (ds.sequential()) os << ",seq";
    os << '\n';
    std::vector<std::size_t> seq_of(ds.rows.size(), 0);
    if (ds.sequential()) {
        const auto off = ds.seq_offsets();
        for (std::size_t s = 0; s < off.size(); ++s)
            for (std::size_t t = 0; t < ds.seq_lengths[s]; ++t) seq_of[off[s] + t] = s;
    }
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << ds.rows[i][j];
        if (labels) os << "," << ds.labels[i];
        if (ds.sequential()) os << "," << seq_of[i];
        os << '\n';
    }
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ContractError("cannot write file: " + path);
        f << os.str();
        if (!f) throw ContractError("write failed: " + path);
    }
    std::ofstream meta(path + ".meta");
    if (!meta) throw ContractError("cannot write file: " + path + ".meta");
    for (const auto& [k, v] : ds.provenance) meta << k << "=" << v << '\n';
}

Dataset load_dataset(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw ParseError(1, "empty dataset file");
    const auto names = tokenize(header);
    int label_col = -1, seq_col = -1;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "label") label_col = static_cast<int>(i);
        if (names[i] == "seq") seq_col = static_cast<int>(i);
    }
    Dataset ds;
    std::string line;
    int line_no = 1;
    long last_seq = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cells = tokenize(line);
        if (cells.empty()) continue;
        if (cells.size() != names.size()) throw ParseError(line_no, "ragged row");
        Row r;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v;
            if (!parse_double(cells[i], v)) throw ParseError(line_no, "non-numeric cell");
            if (static_cast<int>(i) == label_col) {
                ds.labels.push_back(static_cast<int>(v));
            } else if (static_cast<int>(i) == seq_col) {
                const long s = static_cast<long>(v);
                if (s != last_seq) {
                    ds.seq_lengths.push_back(0);
                    last_seq = s;
                }
                ++ds.seq_lengths.back();
            } else {
                r.push_back(v);
            }
        }
        ds.rows.push_back(std::move(r));
    }
    if (ds.rows.empty()) throw ParseError(line_no, "no data rows");
    std::ifstream meta(path + ".meta");
    while (meta && std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) ds.provenance[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return ds;
}

}  // namespace san
