#pragma once

// Datasets: synthetic generators, delimited-text ingestion, outlier injection
// and train/validation/test splitting.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "san/sin.hpp"

namespace san {

struct Dataset {
    Rows rows;
    std::vector<int> labels;               // empty when unlabeled
    std::vector<std::size_t> seq_lengths;  // empty for independent rows
    Rows latent;                           // generator ground truth, may be empty
    std::vector<char> outlier;             // per row, set by inject_outliers
    // Unit indices: rows for independent data, sequences otherwise.
    std::vector<std::size_t> train, val, test;
    std::map<std::string, std::string> provenance;

    std::size_t dim() const { return rows.empty() ? 0 : rows[0].size(); }
    bool sequential() const { return !seq_lengths.empty(); }
    std::size_t num_units() const { return sequential() ? seq_lengths.size() : rows.size(); }
    // Offset of each sequence's first row.
    std::vector<std::size_t> seq_offsets() const;
    Rows unit(std::size_t i) const;
    Rows gather_rows(const std::vector<std::size_t>& units) const;
    std::vector<Rows> gather_units(const std::vector<std::size_t>& units) const;
};

Dataset pinwheel(int n_per_arm = 1000, int arms = 5, double radial_std = 0.3, double tangential_std = 0.05,
                 double rate = 0.25, std::uint64_t seed = 0);

// Dot positions bounce with constant speed on [0, width]; frames are Gaussian
// bumps on `width` pixels normalized to unit mass.
Dataset dot_sequences(int n_seq, int t_len, int width = 16, double dot_std = 1.0, double speed = 0.5,
                      std::uint64_t seed = 0);

// Reads a numeric table (comma or whitespace separated). A first line with no
// numeric cells is taken as a header. label_column < 0 counts from the end.
Dataset load_delimited(const std::string& path, bool has_labels = false, int label_column = -1);

// Replaces ⌊fraction·n⌋ rows with N(0, outlier_std²·I) draws, n being the
// training rows when a split exists and all rows otherwise.
Dataset inject_outliers(const Dataset& ds, double fraction, double outlier_std, std::uint64_t seed);

// Shuffles units; ⌊train_frac·n⌋ train, the remainder halved into validation
// (rounded down) and test.
Dataset split(const Dataset& ds, double train_frac = 0.7, std::uint64_t seed = 0);

struct ColumnStats {
    std::vector<double> mean, sd;
};
// Standardizes every row with statistics of the training rows.
ColumnStats standardize(Dataset& ds);

// Delimited export with a header line (y0.., then label, seq when present)
// and a key=value provenance file alongside at path + ".meta".
void save_dataset(const Dataset& ds, const std::string& path);
// Reads the format written by save_dataset.
Dataset load_dataset(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace san
