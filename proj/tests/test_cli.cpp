// SPDX-License-Identifier: Apache-2.0

#include "cimt/cli.hpp"
#include "cimt/pgm.hpp"
#include "cimt/text.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace cimt;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "cimt_kit");
    return cli::run(args);
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

std::vector<std::string> text_fields(const std::string& line)
{
    std::vector<std::string> out;
    for (const auto f : text::split_fields(line)) {
        out.emplace_back(f);
    }
    return out;
}

std::string phantoms(const test::TempDir& dir, const std::string& n, std::vector<std::string> extra = {})
{
    const std::string out = (dir / "ph").string();
    std::vector<std::string> args = {"phantom", "--output", out, "--n", n, "--seed", "5", "--width", "64"};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(run(args) == cli::kExitOk);
    return out;
}

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("measure matches the analytic values")
    {
        test::TempDir dir("cli_measure");
        const auto ph = phantoms(dir, "5");
        const auto csv = (dir / "m.csv").string();
        CHECK(run({"measure", "--input", ph, "--calibration", ph + "/calibration.csv", "--output", csv}) ==
              cli::kExitOk);
        const auto rows = lines(test::slurp(csv));
        const auto analytic = lines(test::slurp(fs::path(ph) / "analytic.csv"));
        REQUIRE(rows.size() == 6);
        REQUIRE(analytic.size() == 6);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto f = text_fields(rows[i]);
            const auto a = text_fields(analytic[i]);
            CHECK(f[0] == a[0]);
            CHECK(f[3] == a[1]);
        }
        CHECK(lines(test::slurp(dir / "m.failures.csv")).size() == 1);
        CHECK(test::slurp(dir / "m.meta.txt").find("thickness_convention=inclusive") != std::string::npos);
    }

    TEST_CASE("a corrupt map is reported and the rest still measured")
    {
        test::TempDir dir("cli_corrupt");
        const auto ph = phantoms(dir, "5");
        test::spit(fs::path(ph) / "clin_0002_L.prob.pgm", "P5 64 512 65535\ngarbage");
        const auto csv = (dir / "m.csv").string();
        CHECK(run({"measure", "--input", ph, "--calibration", ph + "/calibration.csv", "--output", csv}) ==
              cli::kExitPartial);
        CHECK(lines(test::slurp(csv)).size() == 5);
        const auto failures = lines(test::slurp(dir / "m.failures.csv"));
        REQUIRE(failures.size() == 2);
        CHECK(failures[1].starts_with("clin_0002_L,"));
    }

    TEST_CASE("missing calibration row fails only that image")
    {
        test::TempDir dir("cli_nocal");
        const auto ph = phantoms(dir, "3");
        const auto table = lines(test::slurp(fs::path(ph) / "calibration.csv"));
        test::spit(dir / "partial.csv", table[0] + "\n" + table[1] + "\n" + table[2] + "\n");
        const auto csv = (dir / "m.csv").string();
        CHECK(run({"measure", "--input", ph, "--calibration", (dir / "partial.csv").string(), "--output", csv}) ==
              cli::kExitPartial);
        CHECK(lines(test::slurp(csv)).size() == 3);
    }

    TEST_CASE("empty input directory")
    {
        test::TempDir dir("cli_empty");
        fs::create_directories(dir / "in");
        test::spit(dir / "cal.csv", "image_id,mm_per_pixel,orig_width,orig_height\n");
        CHECK(run({"measure", "--input", (dir / "in").string(), "--calibration", (dir / "cal.csv").string(),
                   "--output", (dir / "m.csv").string()}) == cli::kExitConfig);
        CHECK_FALSE(fs::exists(dir / "m.csv"));
    }

    TEST_CASE("bad arguments")
    {
        CHECK(run({}) == cli::kExitConfig);
        CHECK(run({"measure"}) == cli::kExitConfig);
        CHECK(run({"frobnicate"}) == cli::kExitConfig);
        test::TempDir dir("cli_bad");
        const auto ph = phantoms(dir, "2");
        CHECK(run({"measure", "--input", ph, "--calibration", ph + "/calibration.csv", "--output",
                   (dir / "m.csv").string(), "--threshold", "1.5"}) == cli::kExitConfig);
        CHECK(run({"measure", "--input", ph, "--calibration", ph + "/calibration.csv", "--output",
                   (dir / "m.csv").string(), "--aggregation", "mode"}) == cli::kExitConfig);
    }

    TEST_CASE("evaluate on self-consistent phantoms")
    {
        test::TempDir dir("cli_eval");
        const auto ph = phantoms(dir, "4");
        const auto out = (dir / "ev").string();
        CHECK(run({"evaluate", "--input", ph, "--calibration", ph + "/calibration.csv", "--contours", ph,
                   "--output", out, "--seed", "42"}) == cli::kExitOk);
        const auto summary = lines(test::slurp(dir / "ev/summary.csv"));
        REQUIRE(summary.size() == 2);
        CHECK(summary[1] == "42,4,1.000000,1.000000,0.000,0.000,0.000,1.000000,0");
        CHECK(lines(test::slurp(dir / "ev/per_image.csv")).size() == 5);
        CHECK(lines(test::slurp(dir / "ev/bland_altman.csv")).size() == 5);
    }

    TEST_CASE("evaluate with offset phantoms shows positive bias")
    {
        test::TempDir dir("cli_eval_offset");
        const auto ph = phantoms(dir, "4", {"--softness", "3", "--offset", "0.2"});
        const auto out = (dir / "ev").string();
        CHECK(run({"evaluate", "--input", ph, "--calibration", ph + "/calibration.csv", "--contours", ph,
                   "--output", out}) == cli::kExitOk);
        const auto f = text_fields(lines(test::slurp(dir / "ev/summary.csv"))[1]);
        CHECK(std::stod(f[4]) > 0.0);
        CHECK(std::stod(f[6]) > 0.0);
    }

    TEST_CASE("evaluate needs overlapping ids")
    {
        test::TempDir dir("cli_eval_none");
        const auto ph = phantoms(dir, "2");
        fs::create_directories(dir / "nocontours");
        CHECK(run({"evaluate", "--input", ph, "--calibration", ph + "/calibration.csv", "--contours",
                   (dir / "nocontours").string(), "--output", (dir / "ev").string()}) == cli::kExitConfig);
    }

    TEST_CASE("combining seed summaries")
    {
        test::TempDir dir("cli_combine");
        const std::string header =
            "seed,n,test_dice,test_iou,cimt_mae_um,cimt_rmse_um,cimt_bias_um,cimt_pearson_r,n_excluded\n";
        test::spit(dir / "s42.csv", header + "42,438,0.771,0.63,175.310,210.0,12.0,0.61,0\n");
        test::spit(dir / "s123.csv", header + "123,438,0.773,0.64,194.487,230.0,9.0,0.58,0\n");
        test::spit(dir / "s999.csv", header + "999,438,0.778,0.65,173.688,205.0,15.0,0.63,0\n");
        CHECK(run({"evaluate", "--combine", (dir / "s42.csv").string(), (dir / "s123.csv").string(),
                   (dir / "s999.csv").string(), "--output", dir.path().string()}) == cli::kExitOk);
        const auto rows = lines(test::slurp(dir / "seed_summary.csv"));
        REQUIRE(rows.size() == 5);
        const auto last = text_fields(rows[4]);
        CHECK(last[2] == "0.7740 $\\pm$ 0.0036");
        CHECK(last[4] == "181.16 $\\pm$ 11.57");
    }

    TEST_CASE("calibrate then measure with the chosen threshold")
    {
        test::TempDir dir("cli_cal");
        const auto ph = phantoms(dir, "6", {"--softness", "3", "--offset", "0.2"});
        const auto out = (dir / "cal").string();
        CHECK(run({"calibrate", "--input", ph, "--calibration", ph + "/calibration.csv", "--contours", ph,
                   "--output", out, "--temperatures", "0.5,1,2,5"}) == cli::kExitOk);
        const auto manifest = test::slurp(dir / "cal/calibration.txt");
        CHECK(manifest.find("objective=mae_um") != std::string::npos);
        const auto sweep = lines(test::slurp(dir / "cal/sweep.csv"));
        CHECK(sweep.size() == 20);
        const auto temps = lines(test::slurp(dir / "cal/temperature.csv"));
        REQUIRE(temps.size() == 5);
        for (std::size_t i = 2; i < temps.size(); ++i) {
            CHECK(temps[i].substr(temps[i].find(',')) == temps[1].substr(temps[1].find(',')));
        }
        CHECK(run({"measure", "--input", ph, "--calibration", ph + "/calibration.csv", "--output",
                   (dir / "m.csv").string(), "--threshold-file", out + "/calibration.txt"}) == cli::kExitOk);
        const auto rows = lines(test::slurp(dir / "m.csv"));
        CHECK(text_fields(rows[1])[1] != "0.5");
    }

    TEST_CASE("calibrate rejects a bad grid")
    {
        test::TempDir dir("cli_cal_bad");
        const auto ph = phantoms(dir, "2");
        CHECK(run({"calibrate", "--input", ph, "--calibration", ph + "/calibration.csv", "--contours", ph,
                   "--output", (dir / "cal").string(), "--grid", "0.9:0.1:0.1x"}) == cli::kExitConfig);
    }

    TEST_CASE("split writes one leak-free manifest per seed")
    {
        test::TempDir dir("cli_split");
        std::string ids;
        for (int i = 1; i <= 40; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "clin_%04d_L\nclin_%04d_R\n", i, i);
            ids += buf;
        }
        test::spit(dir / "ids.txt", ids);
        CHECK(run({"split", "--ids", (dir / "ids.txt").string(), "--output", (dir / "sp").string()}) ==
              cli::kExitOk);
        for (const char* seed : {"42", "123", "999"}) {
            const auto rows = lines(test::slurp(dir / (std::string("sp/manifest_seed") + seed + ".csv")));
            CHECK(rows.size() == 81);
        }
    }

    TEST_CASE("split respects a manifest partition in measure")
    {
        test::TempDir dir("cli_partition");
        const auto ph = phantoms(dir, "20");
        CHECK(run({"split", "--input", ph, "--output", (dir / "sp").string(), "--seed", "42"}) == cli::kExitOk);
        const auto manifest = (dir / "sp/manifest_seed42.csv").string();
        CHECK(run({"measure", "--input", ph, "--calibration", ph + "/calibration.csv", "--output",
                   (dir / "m.csv").string(), "--manifest", manifest, "--partition", "test"}) == cli::kExitOk);
        // 10 patients at (0.7, 0.1, 0.2) put 2 patients, 4 images, in test.
        CHECK(lines(test::slurp(dir / "m.csv")).size() == 5);
    }

    TEST_CASE("report on perfect agreement collapses the limits")
    {
        test::TempDir dir("cli_report");
        test::spit(dir / "pairs.csv", "image_id,pred_um,ref_um\na,700,700\nb,800,800\nc,650,650\n");
        CHECK(run({"report", "--pairs", (dir / "pairs.csv").string(), "--output", dir.path().string()}) ==
              cli::kExitOk);
        const auto rows = lines(test::slurp(dir / "agreement.csv"));
        REQUIRE(rows.size() == 2);
        CHECK(rows[1] == "3,0,0.000,0.000,0.000,0.000,0.000,0.000,1.000000");
    }

    TEST_CASE("import-cf builds a calibration table")
    {
        test::TempDir dir("cli_import");
        test::spit(dir / "clin_0001_L_CF.txt", "0.0623\n");
        test::spit(dir / "dims.csv", "image_id,orig_width,orig_height\nclin_0001_L,768,576\n");
        CHECK(run({"import-cf", "--cf-dir", dir.path().string(), "--dimensions", (dir / "dims.csv").string(),
                   "--output", (dir / "cal.csv").string()}) == cli::kExitOk);
        const auto rows = lines(test::slurp(dir / "cal.csv"));
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == "image_id,mm_per_pixel,orig_width,orig_height");
        CHECK(rows[1].starts_with("clin_0001_L,0.0623,768,576"));
    }

    TEST_CASE("outputs are byte-identical across runs and worker counts")
    {
        test::TempDir dir("cli_repro");
        const auto ph = phantoms(dir, "6", {"--softness", "2", "--noise", "0.03"});
        const auto cal = ph + "/calibration.csv";
        CHECK(run({"measure", "--input", ph, "--calibration", cal, "--output", (dir / "a.csv").string()}) == 0);
        CHECK(run({"--jobs", "4", "measure", "--input", ph, "--calibration", cal, "--output",
                   (dir / "b.csv").string()}) == 0);
        CHECK(test::slurp(dir / "a.csv") == test::slurp(dir / "b.csv"));
    }
}
