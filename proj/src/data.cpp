#include "qcast/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace qcast {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_cell(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nan("");
    try {
        std::size_t pos = 0;
        double v = std::stod(t, &pos);
        if (pos != t.size()) return std::nan("");
        return v;
    } catch (const std::exception&) {
        return std::nan("");
    }
}

}  // namespace

DatasetSchema DatasetSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("schema: cannot open " + path);
    DatasetSchema s;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("schema: bad line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "time") {
            s.time_col = val;
        } else if (key == "features") {
            s.features = split_list(val);
        } else if (key == "targets") {
            s.targets = split_list(val);
        } else if (key == "window") {
            s.window = std::stoul(val);
        } else if (key == "max_ffill") {
            s.max_ffill = std::stoi(val);
        } else if (key == "split") {
            // "head:<train>:<test>" or "frac:<train fraction>"
            auto parts = [&] {
                std::vector<std::string> p;
                std::istringstream is(val);
                std::string item;
                while (std::getline(is, item, ':')) p.push_back(item);
                return p;
            }();
            if (parts.size() == 3 && parts[0] == "head") {
                s.split_kind = SplitKind::head;
                s.train_count = std::stoul(parts[1]);
                s.test_count = std::stoul(parts[2]);
            } else if (parts.size() == 2 && parts[0] == "frac") {
                s.split_kind = SplitKind::frac;
                s.train_frac = std::stod(parts[1]);
            } else {
                throw std::runtime_error("schema: bad split: " + val);
            }
        } else {
            throw std::runtime_error("schema: unknown key: " + key);
        }
    }
    if (s.features.empty()) throw std::runtime_error("schema: no features");
    if (s.targets.empty()) throw std::runtime_error("schema: no targets");
    return s;
}

RawSeries ingest_csv(const std::string& path, const DatasetSchema& schema,
                     PreprocessSummary* summary) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("ingest_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);

    auto col_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return i;
        throw std::runtime_error("ingest_csv: column not found: " + name);
    };

    // mapped columns: features first, then targets not already present
    RawSeries s;
    std::vector<std::size_t> src;
    for (const auto& f : schema.features) {
        s.column_names.push_back(f);
        src.push_back(col_index(f));
    }
    for (const auto& t : schema.targets) {
        if (std::find(s.column_names.begin(), s.column_names.end(), t) ==
            s.column_names.end()) {
            s.column_names.push_back(t);
            src.push_back(col_index(t));
        }
    }
    s.columns.resize(s.column_names.size());

    const bool has_time = !schema.time_col.empty();
    const std::size_t time_idx = has_time ? col_index(schema.time_col) : 0;

    std::unordered_set<std::string> seen_ts;
    std::size_t dupes = 0, rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (has_time) {
            const std::string ts =
                time_idx < cells.size() ? trim(cells[time_idx]) : "";
            if (!seen_ts.insert(ts).second) {
                ++dupes;
                continue;  // keep first occurrence
            }
            s.timestamps.push_back(ts);
        } else {
            s.timestamps.emplace_back();
        }
        for (std::size_t c = 0; c < src.size(); ++c)
            s.columns[c].push_back(src[c] < cells.size() ? parse_cell(cells[src[c]])
                                                         : std::nan(""));
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("ingest_csv: zero data rows in " + path);
    if (dupes > 0)
        std::cerr << "warning: dropped " << dupes << " duplicate-timestamp rows\n";
    if (summary) {
        summary->raw_rows = rows;
        summary->duplicate_rows = dupes;
    }
    return s;
}

RawSeries fill_gaps(const RawSeries& series, int max_ffill,
                    PreprocessSummary* summary) {
    RawSeries out = series;
    const std::size_t n = out.rows();
    std::size_t n_ffill = 0, n_interp = 0;

    for (std::size_t c = 0; c < out.columns.size(); ++c) {
        auto& col = out.columns[c];
        if (std::all_of(col.begin(), col.end(),
                        [](double v) { return std::isnan(v); }))
            throw std::runtime_error("fill_gaps: column entirely missing: " +
                                     out.column_names[c]);
        std::size_t i = 0;
        while (i < n) {
            if (!std::isnan(col[i])) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && std::isnan(col[j])) ++j;
            const std::size_t run = j - i;
            const bool has_left = i > 0;
            const bool has_right = j < n;
            if (run <= std::size_t(std::max(max_ffill, 0)) && has_left) {
                for (std::size_t k = i; k < j; ++k) col[k] = col[i - 1];
                n_ffill += run;
            } else if (has_left && has_right) {
                const double lo = col[i - 1], hi = col[j];
                for (std::size_t k = i; k < j; ++k)
                    col[k] = lo + (hi - lo) * double(k - i + 1) / double(run + 1);
                n_interp += run;
            }
            // no bracketing value: left missing, row gets dropped below
            i = j;
        }
    }

    // drop rows still missing any mapped column
    std::vector<bool> keep(n, true);
    std::size_t dropped = 0;
    for (std::size_t r = 0; r < n; ++r) {
        for (const auto& col : out.columns)
            if (std::isnan(col[r])) {
                keep[r] = false;
                break;
            }
        if (!keep[r]) ++dropped;
    }
    if (dropped > 0) {
        RawSeries compact;
        compact.column_names = out.column_names;
        compact.columns.resize(out.columns.size());
        for (std::size_t r = 0; r < n; ++r) {
            if (!keep[r]) continue;
            compact.timestamps.push_back(out.timestamps[r]);
            for (std::size_t c = 0; c < out.columns.size(); ++c)
                compact.columns[c].push_back(out.columns[c][r]);
        }
        out = std::move(compact);
    }
    if (summary) {
        summary->dropped_rows += dropped;
        summary->filled_ffill += n_ffill;
        summary->filled_interp += n_interp;
    }
    return out;
}

ScalerStats standardize(RawSeries& series, std::size_t train_boundary) {
    const std::size_t n = series.rows();
    if (train_boundary == 0 || train_boundary > n)
        throw std::invalid_argument("standardize: bad train boundary");

    ScalerStats stats;
    for (auto& col : series.columns) {
        double mean = 0.0;
        for (std::size_t r = 0; r < train_boundary; ++r) mean += col[r];
        mean /= double(train_boundary);
        double var = 0.0;
        for (std::size_t r = 0; r < train_boundary; ++r) {
            const double d = col[r] - mean;
            var += d * d;
        }
        var /= double(train_boundary);
        const double sd = std::sqrt(var);
        if (sd <= 0.0)
            throw std::runtime_error("standardize: zero-variance feature");
        stats.mean.push_back(mean);
        stats.stdev.push_back(sd);
        for (auto& v : col) v = (v - mean) / sd;
    }
    return stats;
}

WindowedDataset make_windows(const RawSeries& standardized,
                             const ScalerStats& scaler,
                             const DatasetSchema& schema) {
    const std::size_t rows = standardized.rows();
    const std::size_t T = schema.window;
    if (rows <= T)
        throw std::runtime_error("make_windows: series shorter than window+1");

    const std::size_t F = schema.features.size();
    const std::size_t N = schema.targets.size();
    std::vector<std::size_t> target_col(N);
    for (std::size_t k = 0; k < N; ++k) {
        auto it = std::find(standardized.column_names.begin(),
                            standardized.column_names.end(), schema.targets[k]);
        target_col[k] = std::size_t(it - standardized.column_names.begin());
    }

    std::size_t n = rows - T;
    std::size_t train;
    if (schema.split_kind == DatasetSchema::SplitKind::head) {
        if (n < schema.train_count + schema.test_count)
            throw std::runtime_error("make_windows: not enough windows for head split");
        train = schema.train_count;
        n = schema.train_count + schema.test_count;  // remainder unused
    } else {
        train = std::size_t(std::floor(schema.train_frac * double(n)));
        if (train == 0 || train == n)
            throw std::runtime_error("make_windows: degenerate fractional split");
    }

    WindowedDataset ds;
    ds.X = Tensor({n, T, F});
    ds.y = Tensor({n, N});
    ds.split = train;
    ds.feature_names = schema.features;
    ds.target_names = schema.targets;
    ds.input_scaler.mean.assign(scaler.mean.begin(), scaler.mean.begin() + F);
    ds.input_scaler.stdev.assign(scaler.stdev.begin(), scaler.stdev.begin() + F);
    for (std::size_t k = 0; k < N; ++k) {
        ds.target_scaler.mean.push_back(scaler.mean[target_col[k]]);
        ds.target_scaler.stdev.push_back(scaler.stdev[target_col[k]]);
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t f = 0; f < F; ++f)
                ds.X.at3(i, t, f) = standardized.columns[f][i + t];
        for (std::size_t k = 0; k < N; ++k)
            ds.y.at2(i, k) = standardized.columns[target_col[k]][i + T];
    }
    return ds;
}

WindowedDataset preprocess(const std::string& csv_path,
                           const DatasetSchema& schema,
                           PreprocessSummary* summary) {
    RawSeries series = ingest_csv(csv_path, schema, summary);
    if (schema.max_ffill > 0) series = fill_gaps(series, schema.max_ffill, summary);

    const std::size_t rows = series.rows();
    if (rows <= schema.window)
        throw std::runtime_error("preprocess: series shorter than window+1");
    const std::size_t n = rows - schema.window;
    std::size_t train;
    if (schema.split_kind == DatasetSchema::SplitKind::head)
        train = schema.train_count;
    else
        train = std::size_t(std::floor(schema.train_frac * double(n)));
    // rows touched by training windows (inputs and targets)
    const std::size_t boundary = std::min(train + schema.window, rows);

    const ScalerStats stats = standardize(series, boundary);
    WindowedDataset ds = make_windows(series, stats, schema);
    if (summary) {
        summary->train_windows = ds.n_train();
        summary->test_windows = ds.n_test();
    }
    return ds;
}

WindowedDataset head_subset(const WindowedDataset& ds, std::size_t n_train,
                            std::size_t n_test) {
    if (n_train > ds.n_train() || n_test > ds.n_test())
        throw std::invalid_argument("head_subset: subset larger than dataset");
    const std::size_t T = ds.X.dim(1), F = ds.X.dim(2), N = ds.y.dim(1);
    WindowedDataset out;
    out.X = Tensor({n_train + n_test, T, F});
    out.y = Tensor({n_train + n_test, N});
    out.split = n_train;
    out.input_scaler = ds.input_scaler;
    out.target_scaler = ds.target_scaler;
    out.feature_names = ds.feature_names;
    out.target_names = ds.target_names;
    auto copy_window = [&](std::size_t dst, std::size_t src) {
        std::copy_n(&ds.X.data[src * T * F], T * F, &out.X.data[dst * T * F]);
        std::copy_n(&ds.y.data[src * N], N, &out.y.data[dst * N]);
    };
    for (std::size_t i = 0; i < n_train; ++i) copy_window(i, i);
    for (std::size_t i = 0; i < n_test; ++i)
        copy_window(n_train + i, ds.split + i);
    return out;
}

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

Tensor vec_tensor(const std::vector<double>& v) {
    return Tensor({v.size()}, std::vector<double>(v));
}

}  // namespace

Container dataset_to_container(const WindowedDataset& ds) {
    Container c;
    c.tensors["X"] = ds.X;
    c.tensors["y"] = ds.y;
    c.tensors["input_mean"] = vec_tensor(ds.input_scaler.mean);
    c.tensors["input_std"] = vec_tensor(ds.input_scaler.stdev);
    c.tensors["target_mean"] = vec_tensor(ds.target_scaler.mean);
    c.tensors["target_std"] = vec_tensor(ds.target_scaler.stdev);
    c.meta["split"] = std::to_string(ds.split);
    c.meta["features"] = join(ds.feature_names);
    c.meta["targets"] = join(ds.target_names);
    return c;
}

WindowedDataset dataset_from_container(const Container& c) {
    WindowedDataset ds;
    ds.X = c.get("X");
    ds.y = c.get("y");
    ds.split = std::stoul(c.get_meta("split"));
    ds.input_scaler.mean = c.get("input_mean").data;
    ds.input_scaler.stdev = c.get("input_std").data;
    ds.target_scaler.mean = c.get("target_mean").data;
    ds.target_scaler.stdev = c.get("target_std").data;
    ds.feature_names = split_list(c.get_meta("features"));
    ds.target_names = split_list(c.get_meta("targets"));
    return ds;
}

}  // namespace qcast
