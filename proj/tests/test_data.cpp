#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qcast/data.hpp"

using namespace qcast;
using namespace qcast::testing;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/qcast_test_" + name) {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

DatasetSchema basic_schema() {
    DatasetSchema s;
    s.time_col = "ts";
    s.features = {"a", "b"};
    s.targets = {"a"};
    s.window = 2;
    s.split_kind = DatasetSchema::SplitKind::frac;
    s.train_frac = 0.8;
    return s;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("schema parsing") {
    TempFile f("schema1",
               "# comment\n"
               "time = Formatted Date\n"
               "features = t, h , w\n"
               "targets = t\n"
               "window = 12\n"
               "max_ffill = 3\n"
               "split = head:10000:2000\n");
    DatasetSchema s = DatasetSchema::load(f.path);
    CHECK(s.time_col == "Formatted Date");
    REQUIRE(s.features.size() == 3);
    CHECK(s.features[1] == "h");
    CHECK(s.window == 12);
    CHECK(s.max_ffill == 3);
    CHECK(s.split_kind == DatasetSchema::SplitKind::head);
    CHECK(s.train_count == 10000);
    CHECK(s.test_count == 2000);

    TempFile g("schema2",
               "features=x\ntargets=x\nsplit = frac:0.75\n");
    DatasetSchema s2 = DatasetSchema::load(g.path);
    CHECK(s2.time_col.empty());
    CHECK(s2.split_kind == DatasetSchema::SplitKind::frac);
    CHECK(s2.train_frac == doctest::Approx(0.75));

    TempFile bad("schema3", "features=x\n");  // no targets
    CHECK_THROWS(DatasetSchema::load(bad.path));
}

TEST_CASE("csv ingest") {
    DatasetSchema s = basic_schema();

    SUBCASE("values, quoting and unparseable cells") {
        TempFile f("csv1",
                   "ts,b,a,junk\n"
                   "\"2020-01-01, 00:00\",2.5,1.0,zzz\n"
                   "t2,not_a_number,3.0,zzz\n"
                   "t3,,4.0,zzz\n");
        PreprocessSummary sum;
        RawSeries r = ingest_csv(f.path, s, &sum);
        REQUIRE(r.rows() == 3);
        CHECK(sum.raw_rows == 3);
        // column order is features first: a then b
        CHECK(r.column_names[0] == "a");
        CHECK(r.column_names[1] == "b");
        CHECK(r.columns[0][0] == 1.0);
        CHECK(r.columns[1][0] == 2.5);
        CHECK(std::isnan(r.columns[1][1]));
        CHECK(std::isnan(r.columns[1][2]));
        CHECK(r.timestamps[0] == "2020-01-01, 00:00");
    }

    SUBCASE("duplicate timestamps keep the first row") {
        TempFile f("csv2",
                   "ts,a,b\n"
                   "t1,1,10\n"
                   "t1,2,20\n"
                   "t2,3,30\n");
        PreprocessSummary sum;
        RawSeries r = ingest_csv(f.path, s, &sum);
        REQUIRE(r.rows() == 2);
        CHECK(sum.duplicate_rows == 1);
        CHECK(r.columns[0][0] == 1.0);
        CHECK(r.columns[0][1] == 3.0);
    }

    SUBCASE("missing column and empty file rejected") {
        TempFile f("csv3", "ts,a\n t1,1\n");
        CHECK_THROWS(ingest_csv(f.path, s));
        TempFile g("csv4", "ts,a,b\n");
        CHECK_THROWS(ingest_csv(g.path, s));
    }
}

TEST_CASE("gap filling") {
    RawSeries r;
    r.column_names = {"a"};
    const double nan = std::nan("");

    SUBCASE("short runs forward-fill from the left value") {
        r.columns = {{5.0, nan, nan, 8.0}};
        r.timestamps.assign(4, "");
        PreprocessSummary sum;
        RawSeries out = fill_gaps(r, 3, &sum);
        REQUIRE(out.rows() == 4);
        CHECK(out.columns[0][1] == 5.0);
        CHECK(out.columns[0][2] == 5.0);
        CHECK(out.columns[0][3] == 8.0);
        CHECK(sum.filled_ffill == 2);
        CHECK(sum.filled_interp == 0);
        CHECK(sum.dropped_rows == 0);
    }

    SUBCASE("long runs interpolate linearly between the bracketing values") {
        r.columns = {{0.0, nan, nan, nan, nan, 10.0}};
        r.timestamps.assign(6, "");
        PreprocessSummary sum;
        RawSeries out = fill_gaps(r, 3, &sum);
        REQUIRE(out.rows() == 6);
        const double expect[6] = {0, 2, 4, 6, 8, 10};
        for (int i = 0; i < 6; ++i)
            CHECK(out.columns[0][i] == doctest::Approx(expect[i]).epsilon(1e-12));
        CHECK(sum.filled_interp == 4);
    }

    SUBCASE("leading missing values cannot be filled and drop the rows") {
        r.columns = {{nan, nan, 3.0, 4.0}};
        r.timestamps = {"t0", "t1", "t2", "t3"};
        PreprocessSummary sum;
        RawSeries out = fill_gaps(r, 3, &sum);
        REQUIRE(out.rows() == 2);
        CHECK(out.columns[0][0] == 3.0);
        CHECK(out.timestamps[0] == "t2");
        CHECK(sum.dropped_rows == 2);
    }

    SUBCASE("trailing run longer than max_ffill has no right bracket") {
        r.columns = {{1.0, 2.0, nan, nan, nan}};
        r.timestamps.assign(5, "");
        RawSeries out = fill_gaps(r, 2, nullptr);
        // run of 3 > max_ffill 2 and no right value -> rows dropped
        CHECK(out.rows() == 2);

        RawSeries out2 = fill_gaps(r, 3, nullptr);
        CHECK(out2.rows() == 5);
        CHECK(out2.columns[0][4] == 2.0);
    }

    SUBCASE("entirely missing column rejected") {
        r.columns = {{nan, nan}};
        r.timestamps.assign(2, "");
        CHECK_THROWS(fill_gaps(r, 3, nullptr));
    }
}

TEST_CASE("standardization") {
    Rng rng(31);
    RawSeries r;
    r.column_names = {"a", "b"};
    r.columns.resize(2);
    for (int i = 0; i < 50; ++i) {
        r.columns[0].push_back(rng.uniform(-3.0, 7.0));
        r.columns[1].push_back(rng.uniform(100.0, 200.0));
    }
    r.timestamps.assign(50, "");
    RawSeries orig = r;

    ScalerStats st = standardize(r, 40);

    SUBCASE("training rows have zero mean and unit population variance") {
        for (std::size_t c = 0; c < 2; ++c) {
            double mean = 0.0, var = 0.0;
            for (int i = 0; i < 40; ++i) mean += r.columns[c][i];
            mean /= 40.0;
            for (int i = 0; i < 40; ++i) {
                const double d = r.columns[c][i] - mean;
                var += d * d;
            }
            var /= 40.0;
            CHECK(std::abs(mean) < 1e-12);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    SUBCASE("transform/inverse round-trip") {
        for (std::size_t c = 0; c < 2; ++c)
            for (int i = 0; i < 50; ++i) {
                CHECK(st.transform(c, orig.columns[c][i]) ==
                      doctest::Approx(r.columns[c][i]).epsilon(1e-12));
                CHECK(st.inverse(c, r.columns[c][i]) ==
                      doctest::Approx(orig.columns[c][i]).epsilon(1e-12));
            }
    }

    SUBCASE("statistics ignore rows at and after the boundary") {
        RawSeries perturbed = orig;
        for (int i = 40; i < 50; ++i) perturbed.columns[0][i] += 1e6;
        ScalerStats st2 = standardize(perturbed, 40);
        CHECK(st2.mean[0] == doctest::Approx(st.mean[0]).epsilon(1e-12));
        CHECK(st2.stdev[0] == doctest::Approx(st.stdev[0]).epsilon(1e-12));
    }

    SUBCASE("zero variance and bad boundary rejected") {
        RawSeries flat;
        flat.column_names = {"a"};
        flat.columns = {{2.0, 2.0, 2.0, 2.0}};
        flat.timestamps.assign(4, "");
        CHECK_THROWS(standardize(flat, 4));
        CHECK_THROWS(standardize(orig, 0));
        CHECK_THROWS(standardize(orig, 51));
    }
}

TEST_CASE("windowing") {
    DatasetSchema s = basic_schema();
    s.window = 12;
    s.split_kind = DatasetSchema::SplitKind::frac;
    s.train_frac = 2.0 / 3.0;

    RawSeries r;
    r.column_names = {"a", "b"};
    r.columns.resize(2);
    for (int i = 0; i < 15; ++i) {
        r.columns[0].push_back(double(i));
        r.columns[1].push_back(double(100 + i));
    }
    r.timestamps.assign(15, "");
    ScalerStats identity;
    identity.mean = {0.0, 0.0};
    identity.stdev = {1.0, 1.0};

    SUBCASE("15 rows with window 12 give 3 windows, aligned to the next row") {
        WindowedDataset ds = make_windows(r, identity, s);
        CHECK(ds.n_windows() == 3);
        CHECK(ds.n_train() == 2);
        CHECK(ds.n_test() == 1);
        for (std::size_t w = 0; w < 3; ++w) {
            for (std::size_t t = 0; t < 12; ++t) {
                CHECK(ds.X.at3(w, t, 0) == double(w + t));
                CHECK(ds.X.at3(w, t, 1) == double(100 + w + t));
            }
            CHECK(ds.y.at2(w, 0) == double(w + 12));  // target = row after window
        }
    }

    SUBCASE("head split truncates and validates the counts") {
        s.split_kind = DatasetSchema::SplitKind::head;
        s.train_count = 2;
        s.test_count = 1;
        WindowedDataset ds = make_windows(r, identity, s);
        CHECK(ds.n_windows() == 3);
        CHECK(ds.n_train() == 2);
        s.test_count = 5;
        CHECK_THROWS(make_windows(r, identity, s));
    }

    SUBCASE("too-short series rejected") {
        s.window = 15;
        CHECK_THROWS(make_windows(r, identity, s));
    }
}

TEST_CASE("end-to-end preprocess and head_subset") {
    std::ostringstream csv;
    csv << "ts,a,b\n";
    Rng rng(41);
    for (int i = 0; i < 60; ++i) {
        csv << "t" << i << "," << (std::sin(i * 0.3) + rng.uniform(-0.1, 0.1))
            << "," << (i % 7);
        csv << "\n";
    }
    TempFile f("e2e", csv.str());

    DatasetSchema s = basic_schema();
    s.window = 5;
    s.train_frac = 0.8;
    PreprocessSummary sum;
    WindowedDataset ds = preprocess(f.path, s, &sum);
    CHECK(ds.n_windows() == 55);
    CHECK(ds.n_train() == 44);
    CHECK(sum.train_windows == 44);
    CHECK(sum.test_windows == 11);
    CHECK(ds.X.dim(1) == 5);
    CHECK(ds.X.dim(2) == 2);
    CHECK(ds.y.dim(1) == 1);
    // target scaler matches the corresponding input column
    CHECK(ds.target_scaler.mean[0] == ds.input_scaler.mean[0]);
    CHECK(ds.target_scaler.stdev[0] == ds.input_scaler.stdev[0]);

    SUBCASE("head_subset keeps the leading train and test windows") {
        WindowedDataset sub = head_subset(ds, 10, 4);
        CHECK(sub.n_train() == 10);
        CHECK(sub.n_test() == 4);
        CHECK(max_abs_diff(Tensor({5, 2}, std::vector<double>(
                               sub.X.data.begin(), sub.X.data.begin() + 10)),
                           Tensor({5, 2}, std::vector<double>(
                               ds.X.data.begin(), ds.X.data.begin() + 10))) == 0.0);
        // first test window of the subset is the dataset's first test window
        for (std::size_t t = 0; t < 5; ++t)
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(sub.X.at3(10, t, k) == ds.X.at3(ds.split, t, k));
        CHECK_THROWS(head_subset(ds, 1000, 4));
    }

    SUBCASE("container round-trip is byte-idempotent") {
        const std::string p1 = "/tmp/qcast_test_cache1.qds";
        const std::string p2 = "/tmp/qcast_test_cache2.qds";
        dataset_to_container(ds).save(p1);
        WindowedDataset back = dataset_from_container(Container::load(p1));
        CHECK(back.split == ds.split);
        CHECK(back.feature_names == ds.feature_names);
        CHECK(back.target_names == ds.target_names);
        CHECK(max_abs_diff(back.X, ds.X) == 0.0);
        CHECK(max_abs_diff(back.y, ds.y) == 0.0);
        CHECK(back.input_scaler.mean == ds.input_scaler.mean);
        dataset_to_container(back).save(p2);
        CHECK(read_bytes(p1) == read_bytes(p2));
        std::remove(p1.c_str());
        std::remove(p2.c_str());
    }
}
