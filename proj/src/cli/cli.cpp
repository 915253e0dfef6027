// SPDX-License-Identifier: Apache-2.0

#include "cimt/cli.hpp"

#include "cimt/calibration.hpp"
#include "cimt/calibrator.hpp"
#include "cimt/contours.hpp"
#include "cimt/error.hpp"
#include "cimt/metrics.hpp"
#include "cimt/numeric.hpp"
#include "cimt/pgm.hpp"
#include "cimt/phantom.hpp"
#include "cimt/pipeline.hpp"
#include "cimt/simd.hpp"
#include "cimt/splits.hpp"
#include "cimt/text.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace cimt::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> make_logger()
{
    auto logger = std::make_shared<spdlog::logger>("cimt_kit", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    logger->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("CIMT_KIT_LOG")) {
        level = spdlog::level::from_str(env);
    }
    logger->set_level(level);
    return logger;
}

spdlog::logger& log()
{
    static std::shared_ptr<spdlog::logger> logger = make_logger();
    return *logger;
}

void log_warnings(const Diagnostics& diagnostics)
{
    for (const auto& w : diagnostics.warnings) {
        log().warn("{}", w);
    }
}

std::string optional_um(const std::optional<double>& v)
{
    return v ? text::format_fixed(*v, 3) : std::string();
}

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    return out;
}

std::ifstream open_input(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    }
    return in;
}

/// `measure.csv` -> `measure.failures.csv`
fs::path sidecar(const fs::path& output, std::string_view what)
{
    fs::path p = output;
    p.replace_extension();
    return p.string() + "." + std::string(what);
}

struct Failure {
    std::string image_id;
    std::string message;
};

void write_failures(const fs::path& path, const std::vector<Failure>& failures)
{
    std::ofstream out = open_output(path);
    out << "image_id,error\n";
    for (const auto& f : failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << f.image_id << ',' << msg << '\n';
    }
}

/// Probability maps in a directory, keyed (and therefore ordered) by image id.
std::map<std::string, fs::path> list_probability_maps(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw Error(ErrorKind::Io, "input directory '" + dir.string() + "' does not exist");
    }
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.ends_with(kProbabilitySuffix)) {
            out.emplace(image_id_from_path(entry.path(), kProbabilitySuffix), entry.path());
        }
    }
    return out;
}

// Options shared by the measuring commands.
struct PipelineFlags {
    double threshold = kDefaultThreshold;
    std::string threshold_file;
    std::string aggregation = "mean";
    long long target_height = kDefaultTargetHeight;
    bool largest_component = false;
    std::string manifest;
    std::string partition;

    void add_to(CLI::App& cmd, bool with_threshold)
    {
        if (with_threshold) {
            cmd.add_option("--threshold", threshold, "Binarization threshold in (0,1)")->capture_default_str();
            cmd.add_option("--threshold-file", threshold_file,
                           "Calibration manifest from `calibrate`; overrides --threshold");
        }
        cmd.add_option("--aggregation", aggregation, "mean | median | trimmed:<fraction>")->capture_default_str();
        cmd.add_option("--target-height", target_height, "Working-grid height in pixels")->capture_default_str();
        cmd.add_flag("--largest-component", largest_component,
                     "Keep only the largest connected component before measuring");
        cmd.add_option("--manifest", manifest, "Split manifest CSV restricting the images used");
        cmd.add_option("--partition", partition, "Partition of --manifest to use (train, val, test)");
    }

    MeasureOptions options() const
    {
        MeasureOptions o;
        o.threshold = threshold;
        if (!threshold_file.empty()) {
            std::ifstream in = open_input(threshold_file);
            o.threshold = read_best_threshold(in);
        }
        if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
            throw Error(ErrorKind::InvalidConfig, "threshold must lie in (0,1)");
        }
        o.policy = AggregationPolicy::parse(aggregation);
        if (target_height <= 0) {
            throw Error(ErrorKind::InvalidConfig, "target height must be positive");
        }
        o.target_height = target_height;
        o.largest_component = largest_component;
        return o;
    }

    /// Drops ids outside the selected manifest partition.
    void filter(std::map<std::string, fs::path>& maps, std::string_view default_partition) const
    {
        if (manifest.empty()) {
            if (!partition.empty()) {
                throw Error(ErrorKind::InvalidConfig, "--partition requires --manifest");
            }
            return;
        }
        std::ifstream in = open_input(manifest);
        const SplitManifest m = read_manifest_csv(in);
        const Partition wanted = parse_partition(partition.empty() ? default_partition : partition);
        std::erase_if(maps, [&](const auto& kv) {
            const auto it = m.image_assignment.find(kv.first);
            return it == m.image_assignment.end() || it->second.partition != wanted;
        });
    }
};

CalibrationTable load_table(const std::string& path)
{
    Diagnostics diagnostics;
    CalibrationTable table = load_calibration_table(path, &diagnostics);
    log_warnings(diagnostics);
    return table;
}

const CalibrationRecord& require_calibration(const CalibrationTable& table, const std::string& id)
{
    const CalibrationRecord* record = table.find(id);
    if (!record) {
        throw Error(ErrorKind::InvalidInput, "no calibration row for image '" + id + "'");
    }
    return *record;
}

ProbabilityMap load_map(const fs::path& path)
{
    ProbabilityMap map = read_probability_pgm(path);
    validate(map);
    return map;
}

// ---------------------------------------------------------------- measure

struct MeasureArgs {
    std::string input;
    std::string calibration;
    std::string output;
    std::string masks_out;
    PipelineFlags flags;
};

int cmd_measure(const MeasureArgs& args, unsigned jobs)
{
    auto maps = list_probability_maps(args.input);
    args.flags.filter(maps, "test");
    if (maps.empty()) {
        log().error("no probability maps (*{}) found in '{}'", kProbabilitySuffix, args.input);
        return kExitConfig;
    }
    const MeasureOptions options = args.flags.options();
    const CalibrationTable table = load_table(args.calibration);
    if (!args.masks_out.empty()) {
        fs::create_directories(args.masks_out);
    }

    const std::vector<std::pair<std::string, fs::path>> items(maps.begin(), maps.end());
    std::vector<std::optional<Measurement>> results(items.size());
    std::vector<std::string> errors(items.size());
    parallel_for(items.size(), jobs, [&](std::size_t i) {
        const auto& [id, path] = items[i];
        try {
            const ProbabilityMap map = load_map(path);
            results[i] = measure_probability_map(map, require_calibration(table, id), options);
            if (!args.masks_out.empty()) {
                write_mask_pgm(fs::path(args.masks_out) / (id + std::string(kMaskSuffix)), results[i]->mask);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::ofstream out = open_output(args.output);
    out << "image_id,threshold,cimt_px,cimt_um,valid_columns\n";
    std::vector<Failure> failures;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string& id = items[i].first;
        if (!errors[i].empty()) {
            log().error("{}: {}", id, errors[i]);
            failures.push_back({id, errors[i]});
            continue;
        }
        const auto& r = results[i]->result;
        out << id << ',' << text::format_exact(options.threshold) << ','
            << (r ? text::format_fixed(r->cimt_px_working, 4) : std::string()) << ','
            << (r ? text::format_fixed(r->cimt_um, 3) : std::string()) << ','
            << results[i]->profile.valid_column_count << '\n';
        if (!r) {
            log().warn("{}: no foreground column at threshold {}", id, options.threshold);
        }
    }
    write_failures(sidecar(args.output, "failures.csv"), failures);

    std::ofstream meta = open_output(sidecar(args.output, "meta.txt"));
    meta << "thickness_convention=" << kThicknessConvention << '\n'
         << "aggregation=" << options.policy.to_string() << '\n'
         << "threshold=" << text::format_exact(options.threshold) << '\n'
         << "target_height=" << options.target_height << '\n'
         << "largest_component=" << (options.largest_component ? "true" : "false") << '\n';

    log().info("measured {} of {} images ({} kernels)", items.size() - failures.size(), items.size(),
               simd::to_string(simd::kernels().isa));
    return failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- references

struct ReferenceSource {
    std::string contours;
    std::string ref_masks;
    std::string references_csv;
    std::map<std::string, double, std::less<>> table;

    void add_to(CLI::App& cmd, bool allow_table)
    {
        cmd.add_option("--contours", contours, "Directory of <id>.li.txt / <id>.ma.txt reference traces");
        cmd.add_option("--ref-masks", ref_masks, "Directory of <id>.mask.pgm reference masks (working grid)");
        if (allow_table) {
            cmd.add_option("--references", references_csv, "CSV image_id,ref_um with reference CIMT values");
        }
    }

    void load()
    {
        const int given = !contours.empty() + !ref_masks.empty() + !references_csv.empty();
        if (given != 1) {
            throw Error(ErrorKind::InvalidConfig, "give exactly one of --contours, --ref-masks, --references");
        }
        if (references_csv.empty()) {
            return;
        }
        std::ifstream in = open_input(references_csv);
        std::string line;
        std::getline(in, line);
        const auto header = text::split_fields(line);
        if (header.size() < 2 || header[0] != "image_id" || header[1] != "ref_um") {
            throw Error(ErrorKind::Parse, "references CSV must start with image_id,ref_um");
        }
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (text::trim(line).empty()) {
                continue;
            }
            const auto f = text::split_fields(line);
            const auto v = f.size() >= 2 ? text::parse_double(f[1]) : std::nullopt;
            if (!v) {
                throw Error(ErrorKind::Parse, "references CSV line " + std::to_string(line_no) + ": bad ref_um");
            }
            if (!table.emplace(std::string(f[0]), *v).second) {
                throw Error(ErrorKind::DuplicateId, "references CSV line " + std::to_string(line_no) +
                                                        ": duplicate image '" + std::string(f[0]) + "'");
            }
        }
    }

    bool has(const std::string& id) const
    {
        if (!contours.empty()) {
            return fs::exists(fs::path(contours) / (id + std::string(kLiSuffix)));
        }
        if (!ref_masks.empty()) {
            return fs::exists(fs::path(ref_masks) / (id + std::string(kMaskSuffix)));
        }
        return table.contains(id);
    }
};

struct Reference {
    std::optional<BinaryMask> mask;  // on the working grid
    std::optional<double> um;
};

Reference load_reference(const ReferenceSource& source, const std::string& id, const CalibrationRecord& calibration,
                         const MeasureOptions& options, std::size_t working_width, bool want_mask)
{
    Reference ref;
    if (!source.contours.empty()) {
        const ContourPair pair = load_contour_pair(source.contours, id);
        check_within_image(pair, calibration);
        if (const auto r = reference_cimt(pair, calibration, options.policy)) {
            ref.um = r->cimt_um;
        }
        if (want_mask) {
            Diagnostics diagnostics;
            const BandMaskSpec spec{working_width, static_cast<std::size_t>(options.target_height),
                                    Resolution::Working};
            const double sx = static_cast<double>(working_width) / static_cast<double>(calibration.orig_width);
            const double sy =
                static_cast<double>(options.target_height) / static_cast<double>(calibration.orig_height);
            ref.mask = rasterize_band(pair, spec, sx, sy, &diagnostics);
            log_warnings(diagnostics);
        }
    } else if (!source.ref_masks.empty()) {
        BinaryMask mask = read_mask_pgm(fs::path(source.ref_masks) / (id + std::string(kMaskSuffix)));
        const Measurement m = measure_mask(mask, calibration, options.policy, options.target_height);
        if (m.result) {
            ref.um = m.result->cimt_um;
        }
        ref.mask = std::move(mask);
    } else {
        ref.um = source.table.at(id);
    }
    return ref;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string input;
    std::string calibration;
    std::string output;
    std::vector<std::string> combine;
    std::string seed_label;
    ReferenceSource refs;
    PipelineFlags flags;
};

struct ImageEvaluation {
    std::optional<OverlapReport> overlap;
    std::optional<double> pred_um;
    std::optional<double> ref_um;
};

std::string summary_header()
{
    return "seed,n,test_dice,test_iou,cimt_mae_um,cimt_rmse_um,cimt_bias_um,cimt_pearson_r,n_excluded";
}

int combine_summaries(const EvaluateArgs& args)
{
    // Column -> per-seed values, in the order the files were given.
    const std::vector<std::pair<std::string, int>> columns = {
        {"test_dice", 4},    {"test_iou", 4},      {"cimt_mae_um", 2},
        {"cimt_rmse_um", 2}, {"cimt_bias_um", 2}, {"cimt_pearson_r", 3},
    };
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, std::vector<double>> values;
    std::vector<std::string> header_fields;
    for (const auto& path : args.combine) {
        std::ifstream in = open_input(path);
        std::string header;
        std::string row;
        std::getline(in, header);
        std::getline(in, row);
        const auto h = text::split_fields(header);
        const auto r = text::split_fields(row);
        if (h.size() != r.size()) {
            throw Error(ErrorKind::Parse, "summary '" + path + "' is malformed");
        }
        if (header_fields.empty()) {
            header_fields.assign(h.begin(), h.end());
        }
        rows.emplace_back(r.begin(), r.end());
        for (const auto& [name, decimals] : columns) {
            const auto it = std::find(h.begin(), h.end(), name);
            if (it == h.end()) {
                throw Error(ErrorKind::Parse, "summary '" + path + "' lacks column " + name);
            }
            const auto v = text::parse_double(r[static_cast<std::size_t>(it - h.begin())]);
            if (v) {
                values[name].push_back(*v);
            }
        }
    }

    std::ofstream out = open_output(fs::path(args.output) / "seed_summary.csv");
    out << "seed,n";
    for (const auto& c : columns) {
        out << ',' << c.first;
    }
    out << '\n';
    const auto column_index = [&](std::string_view name) {
        return static_cast<std::size_t>(std::find(header_fields.begin(), header_fields.end(), name) -
                                        header_fields.begin());
    };
    long long total_n = 0;
    for (const auto& r : rows) {
        out << r.at(column_index("seed")) << ',' << r.at(column_index("n"));
        total_n += text::parse_integer(r.at(column_index("n"))).value_or(0);
        for (const auto& c : columns) {
            out << ',' << r.at(column_index(c.first));
        }
        out << '\n';
    }
    out << "mean$\\pm$std," << total_n;
    for (const auto& [name, decimals] : columns) {
        const auto& v = values[name];
        out << ',' << (v.empty() ? std::string() : format_mean_sd(seed_summary(v), decimals));
    }
    out << '\n';
    return kExitOk;
}

int cmd_evaluate(EvaluateArgs& args, unsigned jobs)
{
    if (!args.combine.empty()) {
        return combine_summaries(args);
    }
    if (args.input.empty() || args.calibration.empty()) {
        throw Error(ErrorKind::InvalidConfig, "evaluate needs --input and --calibration (or --combine)");
    }
    args.refs.load();
    auto maps = list_probability_maps(args.input);
    args.flags.filter(maps, "test");
    std::erase_if(maps, [&](const auto& kv) { return !args.refs.has(kv.first); });
    if (maps.empty()) {
        log().error("no image has both a prediction and a reference");
        return kExitConfig;
    }
    const MeasureOptions options = args.flags.options();
    const CalibrationTable table = load_table(args.calibration);

    const std::vector<std::pair<std::string, fs::path>> items(maps.begin(), maps.end());
    std::vector<ImageEvaluation> evals(items.size());
    std::vector<std::string> errors(items.size());
    parallel_for(items.size(), jobs, [&](std::size_t i) {
        const auto& [id, path] = items[i];
        try {
            const CalibrationRecord& cal = require_calibration(table, id);
            const ProbabilityMap map = load_map(path);
            const Measurement pred = measure_probability_map(map, cal, options);
            const bool want_mask = args.refs.references_csv.empty();
            const Reference ref = load_reference(args.refs, id, cal, options, map.width, want_mask);
            if (ref.mask) {
                evals[i].overlap = overlap(pred.mask, *ref.mask);
            }
            if (pred.result) {
                evals[i].pred_um = pred.result->cimt_um;
            }
            evals[i].ref_um = ref.um;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    const fs::path out_dir = args.output;
    std::ofstream per_image = open_output(out_dir / "per_image.csv");
    per_image << "image_id,dice,iou,pred_um,ref_um,diff_um\n";
    std::vector<Failure> failures;
    std::vector<double> dice;
    std::vector<double> iou;
    std::vector<CandidatePair> candidates;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string& id = items[i].first;
        if (!errors[i].empty()) {
            log().error("{}: {}", id, errors[i]);
            failures.push_back({id, errors[i]});
            continue;
        }
        const ImageEvaluation& e = evals[i];
        std::optional<double> diff;
        if (e.pred_um && e.ref_um) {
            diff = *e.pred_um - *e.ref_um;
        }
        per_image << id << ',' << (e.overlap ? text::format_fixed(e.overlap->dice, 6) : "") << ','
                  << (e.overlap ? text::format_fixed(e.overlap->iou, 6) : "") << ',' << optional_um(e.pred_um)
                  << ',' << optional_um(e.ref_um) << ',' << optional_um(diff) << '\n';
        if (e.overlap) {
            dice.push_back(e.overlap->dice);
            iou.push_back(e.overlap->iou);
            if (e.overlap->both_empty) {
                log().warn("{}: prediction and reference masks are both empty (dice := 1)", id);
            }
        }
        candidates.push_back({id, e.pred_um, e.ref_um});
    }
    write_failures(out_dir / "failures.csv", failures);

    std::ofstream summary = open_output(out_dir / "summary.csv");
    summary << summary_header() << '\n';
    summary << args.seed_label << ',' << candidates.size() << ','
            << (dice.empty() ? "" : text::format_fixed(compensated_mean(dice), 6)) << ','
            << (iou.empty() ? "" : text::format_fixed(compensated_mean(iou), 6)) << ',';
    const std::size_t with_both = static_cast<std::size_t>(std::count_if(
        candidates.begin(), candidates.end(), [](const CandidatePair& c) { return c.pred_um && c.ref_um; }));
    std::ofstream bland_altman = open_output(out_dir / "bland_altman.csv");
    bland_altman << "image_id,mean_um,diff_um\n";
    if (with_both > 0) {
        const AgreementReport agr = agreement_mutual(candidates);
        summary << text::format_fixed(agr.mae_um, 3) << ',' << text::format_fixed(agr.rmse_um, 3) << ','
                << text::format_fixed(agr.bias_um, 3) << ','
                << (agr.pearson_r ? text::format_fixed(*agr.pearson_r, 6) : "") << ',' << agr.excluded << '\n';
        std::size_t k = 0;
        for (const auto& c : candidates) {
            if (c.pred_um && c.ref_um) {
                const auto& p = agr.bland_altman[k++];
                bland_altman << c.image_id << ',' << text::format_fixed(p.mean_um, 3) << ','
                             << text::format_fixed(p.diff_um, 3) << '\n';
            }
        }
        if (!agr.pearson_r) {
            log().warn("pearson correlation unavailable: {}", agr.pearson_note);
        }
    } else {
        summary << ",,,," << candidates.size() << '\n';
        log().warn("no image has both a predicted and a reference CIMT");
    }
    return failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string input;
    std::string calibration;
    std::string output;
    std::string grid;
    std::string temperatures;
    std::string objective = "mae_um";
    ReferenceSource refs;
    PipelineFlags flags;
};

/// "0.05:0.95:0.05" (inclusive range) or "0.6,0.7,0.8".
std::vector<double> parse_grid(const std::string& spec)
{
    std::vector<double> grid;
    if (spec.find(':') != std::string::npos) {
        const auto f = text::split_fields(spec, ':');
        double bounds[3] = {0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < 3; ++i) {
            const auto v = f.size() == 3 ? text::parse_double(f[i]) : std::nullopt;
            if (!v) {
                throw Error(ErrorKind::InvalidConfig, "bad grid '" + spec + "' (expected lo:hi:step)");
            }
            bounds[i] = *v;
        }
        const auto [lo, hi, step] = bounds;
        if (!(step > 0.0)) {
            throw Error(ErrorKind::InvalidConfig, "grid step must be positive");
        }
        const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
        for (long long k = 0; k <= count; ++k) {
            // Round to 1e-12 so 0.05 + 13 * 0.05 prints and compares as 0.7.
            grid.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
        }
        return grid;
    }
    for (const auto f : text::split_fields(spec)) {
        const auto v = text::parse_double(f);
        if (!v) {
            throw Error(ErrorKind::InvalidConfig, "bad grid value '" + std::string(f) + "'");
        }
        grid.push_back(*v);
    }
    return grid;
}

int cmd_calibrate(CalibrateArgs& args, unsigned jobs)
{
    args.refs.load();
    auto maps = list_probability_maps(args.input);
    args.flags.filter(maps, "val");
    if (maps.empty()) {
        log().error("calibration set is empty");
        return kExitConfig;
    }
    CalibrationConfig config;
    if (!args.grid.empty()) {
        config.threshold_grid = parse_grid(args.grid);
    }
    if (!args.temperatures.empty()) {
        config.temperature_grid = parse_grid(args.temperatures);
    }
    config.objective = parse_objective(args.objective);
    const MeasureOptions options = args.flags.options();
    config.policy = options.policy;
    config.target_height = options.target_height;
    config.largest_component = options.largest_component;
    config.jobs = jobs;
    config.validate();
    const CalibrationTable table = load_table(args.calibration);

    const std::vector<std::pair<std::string, fs::path>> items(maps.begin(), maps.end());
    std::vector<std::optional<CalibrationSample>> loaded(items.size());
    std::vector<std::string> errors(items.size());
    parallel_for(items.size(), jobs, [&](std::size_t i) {
        const auto& [id, path] = items[i];
        try {
            const CalibrationRecord& cal = require_calibration(table, id);
            ProbabilityMap map = load_map(path);
            const Reference ref = load_reference(args.refs, id, cal, options, map.width, false);
            if (!ref.um) {
                throw Error(ErrorKind::InvalidInput, "reference CIMT unavailable");
            }
            loaded[i] = CalibrationSample{std::move(map), cal, *ref.um};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    std::vector<CalibrationSample> samples;
    std::vector<Failure> failures;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (loaded[i]) {
            samples.push_back(std::move(*loaded[i]));
        } else {
            log().error("{}: {}", items[i].first, errors[i]);
            failures.push_back({items[i].first, errors[i]});
        }
    }
    const fs::path out_dir = args.output;
    write_failures(out_dir / "failures.csv", failures);
    if (samples.empty()) {
        log().error("no usable calibration images");
        return kExitConfig;
    }

    const SweepResult sweep = sweep_threshold(samples, config);
    {
        std::ofstream out = open_output(out_dir / "sweep.csv");
        write_sweep_csv(out, sweep);
    }
    {
        std::ofstream out = open_output(out_dir / "calibration.txt");
        write_calibration_manifest(out, sweep);
        out << "n_images=" << samples.size() << '\n';
    }
    if (!args.temperatures.empty()) {
        const auto points = sweep_temperature(samples, config, options.threshold);
        std::ofstream out = open_output(out_dir / "temperature.csv");
        out << "temperature,mae_um,rmse_um,bias_um,n_valid\n";
        for (const auto& p : points) {
            out << text::format_exact(p.temperature) << ',' << text::format_fixed(p.stats.mae_um, 3) << ','
                << text::format_fixed(p.stats.rmse_um, 3) << ',' << text::format_fixed(p.stats.bias_um, 3) << ','
                << p.stats.n_valid << '\n';
        }
    }
    log().info("best threshold {} ({} = {:.3f} um over {} images)", sweep.best_threshold,
               to_string(sweep.objective), sweep.best_objective, samples.size());
    return failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
    std::string input;
    std::string ids;
    std::string output;
    std::vector<std::uint64_t> seeds;
    std::string ratios = "0.7,0.1,0.2";
};

int cmd_split(SplitArgs& args)
{
    std::vector<std::string> image_ids;
    if (!args.ids.empty()) {
        std::ifstream in = open_input(args.ids);
        std::string line;
        while (std::getline(in, line)) {
            const auto id = text::trim(line);
            if (!id.empty() && id.front() != '#') {
                image_ids.emplace_back(id);
            }
        }
    } else if (!args.input.empty()) {
        for (const auto& [id, path] : list_probability_maps(args.input)) {
            image_ids.push_back(id);
        }
    } else {
        throw Error(ErrorKind::InvalidConfig, "split needs --input or --ids");
    }
    if (image_ids.empty()) {
        log().error("no image ids to split");
        return kExitConfig;
    }
    if (args.seeds.empty()) {
        args.seeds = {42, 123, 999};
    }
    const SplitRatios ratios = SplitRatios::parse(args.ratios);
    int status = kExitOk;
    for (const std::uint64_t seed : args.seeds) {
        const SplitManifest m = make_image_split(image_ids, seed, ratios);
        const LeakageReport leakage = verify_no_leakage(m);
        if (!leakage.ok()) {
            log().error("seed {}: {} images leak across partitions", seed, leakage.violations.size());
            status = kExitPartial;
        }
        std::ofstream out = open_output(fs::path(args.output) / ("manifest_seed" + std::to_string(seed) + ".csv"));
        write_manifest_csv(out, m);
        log().info("seed {}: {} / {} / {} patients", seed, m.patient_count(Partition::Train),
                   m.patient_count(Partition::Val), m.patient_count(Partition::Test));
    }
    return status;
}

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
    std::string output;
    std::size_t n = 28;
    std::uint64_t seed = 42;
    std::size_t width = 512;
    std::size_t height = 512;
    double softness = 0.0;
    double offset = 0.0;
    double noise = 0.0;
    double mm_per_pixel = 0.06;
    std::string thickness_family = "constant";
};

int cmd_phantom(const PhantomArgs& args)
{
    PhantomSpec base;
    base.width = args.width;
    base.height = args.height;
    base.edge_softness = args.softness;
    base.probability_offset = args.offset;
    base.noise_sd = args.noise;
    base.mm_per_pixel = args.mm_per_pixel;
    if (args.thickness_family == "constant") {
        base.thickness_curve = CurveSpec::constant(20.0);
    } else if (args.thickness_family == "linear") {
        base.thickness_curve = CurveSpec::linear(20.0, 0.0);
    } else if (args.thickness_family == "sinusoidal") {
        base.thickness_curve = CurveSpec::sinusoidal(20.0, 0.0, static_cast<double>(args.width), 0.0);
    } else {
        throw Error(ErrorKind::InvalidConfig, "unknown thickness family '" + args.thickness_family + "'");
    }
    const auto bundles = generate_suite(args.n, base, args.seed);
    write_suite(args.output, bundles);
    log().info("wrote {} phantoms to '{}'", bundles.size(), args.output);
    return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string pairs;
    std::string output;
};

int cmd_report(const ReportArgs& args)
{
    std::ifstream in = open_input(args.pairs);
    std::string line;
    std::getline(in, line);
    const auto header = text::split_fields(line);
    const auto column = [&](std::string_view name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw Error(ErrorKind::Parse, "pairs CSV lacks column '" + std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_id = column("image_id");
    const std::size_t c_pred = column("pred_um");
    const std::size_t c_ref = column("ref_um");

    std::vector<CandidatePair> candidates;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto f = text::split_fields(line);
        if (f.size() < header.size()) {
            throw Error(ErrorKind::Parse, "pairs CSV line " + std::to_string(line_no) + ": too few fields");
        }
        CandidatePair c;
        c.image_id = std::string(f[c_id]);
        c.pred_um = text::parse_double(f[c_pred]);
        c.ref_um = text::parse_double(f[c_ref]);
        candidates.push_back(std::move(c));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const CandidatePair& a, const CandidatePair& b) { return a.image_id < b.image_id; });
    const AgreementReport agr = agreement_mutual(candidates);

    const fs::path out_dir = args.output;
    std::ofstream ba = open_output(out_dir / "bland_altman.csv");
    ba << "image_id,mean_um,diff_um\n";
    std::size_t k = 0;
    for (const auto& c : candidates) {
        if (c.pred_um && c.ref_um) {
            const auto& p = agr.bland_altman[k++];
            ba << c.image_id << ',' << text::format_fixed(p.mean_um, 3) << ',' << text::format_fixed(p.diff_um, 3)
               << '\n';
        }
    }
    std::ofstream summary = open_output(out_dir / "agreement.csv");
    summary << "n,n_excluded,mae_um,rmse_um,bias_um,sd_diff_um,loa_low_um,loa_high_um,pearson_r\n";
    summary << agr.n << ',' << agr.excluded << ',' << text::format_fixed(agr.mae_um, 3) << ','
            << text::format_fixed(agr.rmse_um, 3) << ',' << text::format_fixed(agr.bias_um, 3) << ','
            << optional_um(agr.diff_sd_um) << ',' << optional_um(agr.loa_low_um) << ','
            << optional_um(agr.loa_high_um) << ','
            << (agr.pearson_r ? text::format_fixed(*agr.pearson_r, 6) : "") << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- import-cf

struct ImportArgs {
    std::string cf_dir;
    std::string dimensions;
    std::string output;
};

int cmd_import_cf(const ImportArgs& args)
{
    Diagnostics diagnostics;
    const auto records = import_cf_files(args.cf_dir, args.dimensions, &diagnostics);
    log_warnings(diagnostics);
    std::ofstream out = open_output(args.output);
    write_calibration_table(out, records);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args)
{
    CLI::App app{"Calibrated carotid intima-media thickness measurement toolkit", "cimt_kit"};
    app.require_subcommand(1);
    unsigned jobs = 1;
    app.add_option("--jobs", jobs, "Worker threads for per-image work")->capture_default_str();

    MeasureArgs measure;
    auto* measure_cmd = app.add_subcommand("measure", "Measure CIMT from probability maps");
    measure_cmd->add_option("--input", measure.input, "Directory of <id>.prob.pgm maps")->required();
    measure_cmd->add_option("--calibration", measure.calibration, "Calibration CSV")->required();
    measure_cmd->add_option("--output", measure.output, "Output CSV")->required();
    measure_cmd->add_option("--masks-out", measure.masks_out, "Optional directory for 8-bit mask PGMs");
    measure.flags.add_to(*measure_cmd, true);

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Overlap and agreement against references");
    evaluate_cmd->add_option("--input", evaluate.input, "Directory of <id>.prob.pgm maps");
    evaluate_cmd->add_option("--calibration", evaluate.calibration, "Calibration CSV");
    evaluate_cmd->add_option("--output", evaluate.output, "Output directory")->required();
    evaluate_cmd->add_option("--seed", evaluate.seed_label, "Seed label for the summary row");
    evaluate_cmd->add_option("--combine", evaluate.combine,
                             "Summaries from several seeds to reduce to mean and sample sd");
    evaluate.refs.add_to(*evaluate_cmd, true);
    evaluate.flags.add_to(*evaluate_cmd, true);

    CalibrateArgs calibrate;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Sweep the threshold on a calibration set");
    calibrate_cmd->add_option("--input", calibrate.input, "Directory of <id>.prob.pgm maps")->required();
    calibrate_cmd->add_option("--calibration", calibrate.calibration, "Calibration CSV")->required();
    calibrate_cmd->add_option("--output", calibrate.output, "Output directory")->required();
    calibrate_cmd->add_option("--grid", calibrate.grid, "Threshold grid lo:hi:step or list (default 0.05:0.95:0.05)");
    calibrate_cmd->add_option("--temperatures", calibrate.temperatures,
                              "Temperature grid for the ablation at --threshold");
    calibrate_cmd->add_option("--objective", calibrate.objective, "mae_um | rmse_um | abs_bias_um")
        ->capture_default_str();
    calibrate.refs.add_to(*calibrate_cmd, true);
    calibrate.flags.add_to(*calibrate_cmd, true);

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Patient-level train/val/test manifests");
    split_cmd->add_option("--input", split.input, "Directory of <id>.prob.pgm maps supplying image ids");
    split_cmd->add_option("--ids", split.ids, "Text file with one image id per line");
    split_cmd->add_option("--output", split.output, "Output directory")->required();
    split_cmd->add_option("--seed", split.seeds, "Seed (repeatable; default 42 123 999)");
    split_cmd->add_option("--ratios", split.ratios, "train,val,test fractions")->capture_default_str();

    PhantomArgs phantom;
    auto* phantom_cmd = app.add_subcommand("phantom", "Generate a synthetic phantom suite");
    phantom_cmd->add_option("--output", phantom.output, "Output directory")->required();
    phantom_cmd->add_option("--n", phantom.n, "Number of phantoms")->capture_default_str();
    phantom_cmd->add_option("--seed", phantom.seed, "Variation seed")->capture_default_str();
    phantom_cmd->add_option("--width", phantom.width)->capture_default_str();
    phantom_cmd->add_option("--height", phantom.height)->capture_default_str();
    phantom_cmd->add_option("--softness", phantom.softness, "Edge softness in px (0 = hard band)")
        ->capture_default_str();
    phantom_cmd->add_option("--offset", phantom.offset, "Additive probability offset")->capture_default_str();
    phantom_cmd->add_option("--noise", phantom.noise, "Probability noise sd")->capture_default_str();
    phantom_cmd->add_option("--mm-per-pixel", phantom.mm_per_pixel)->capture_default_str();
    phantom_cmd->add_option("--thickness-family", phantom.thickness_family, "constant | linear | sinusoidal")
        ->capture_default_str();

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "Bland-Altman pairs and limits of agreement");
    report_cmd->add_option("--pairs", report.pairs, "CSV with image_id,pred_um,ref_um columns")->required();
    report_cmd->add_option("--output", report.output, "Output directory")->required();

    ImportArgs import;
    auto* import_cmd = app.add_subcommand("import-cf", "Build a calibration CSV from per-image CF files");
    import_cmd->add_option("--cf-dir", import.cf_dir, "Directory of <id>_CF.txt files")->required();
    import_cmd->add_option("--dimensions", import.dimensions, "CSV image_id,orig_width,orig_height")->required();
    import_cmd->add_option("--output", import.output, "Calibration CSV to write")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*measure_cmd) {
            return cmd_measure(measure, jobs);
        }
        if (*evaluate_cmd) {
            return cmd_evaluate(evaluate, jobs);
        }
        if (*calibrate_cmd) {
            return cmd_calibrate(calibrate, jobs);
        }
        if (*split_cmd) {
            return cmd_split(split);
        }
        if (*phantom_cmd) {
            return cmd_phantom(phantom);
        }
        if (*report_cmd) {
            return cmd_report(report);
        }
        if (*import_cmd) {
            return cmd_import_cf(import);
        }
    } catch (const std::exception& e) {
        log().error("{}", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace cimt::cli
