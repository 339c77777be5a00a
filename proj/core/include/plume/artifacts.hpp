#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "plume/config.hpp"

namespace plume {

struct EvalOutcome {
    std::vector<EpisodeLog> logs;
    double mean_mse = 0;
    double median_mse = 0;
    double q25_mse = 0;
    double q75_mse = 0;
    double mean_endurance_days = std::numeric_limits<double>::quiet_NaN();
    long uplink_bytes = 0;
    long downlink_bytes = 0;
    int max_uplink_msg_bytes = 0;
};

/// Runs eval.episodes held-out episodes (optionally fanned out over worker
/// threads; per-episode seeding keeps results order-independent).
EvalOutcome evaluate_policy(const RunConfig& cfg, PolicyKind kind, const QNet<float>* net,
                            const std::filesystem::path& png_dir = {});

struct CompareRow {
    std::string policy;
    int agents = 0;
    double mean_mse = 0;
    double median_mse = 0;
    double endurance_days = std::numeric_limits<double>::quiet_NaN();
    long uplink_bytes = 0;
    long downlink_bytes = 0;
    int max_uplink_msg_bytes = 0;
};

std::vector<CompareRow> compare_policies(const RunConfig& cfg, const QNet<float>* net);

// ---- artifact writers ----
void write_slot_csv(const std::filesystem::path& path, const std::vector<EpisodeLog>& logs);
void write_summary_json(const std::filesystem::path& path, const EvalOutcome& outcome,
                        const std::string& policy_name);
void write_curves_csv(const std::filesystem::path& path, const std::vector<EpisodeCurve>& curves);
void write_fit_curves_csv(const std::filesystem::path& path, const FitCurves& curves);
void write_kernel_json(const std::filesystem::path& path, const KernelParams& k);
KernelParams read_kernel_json(const std::filesystem::path& path);
void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows);
void write_compare_json(const std::filesystem::path& path, const std::vector<CompareRow>& rows);

/// Header + rows; used by the tool itself and by tests to re-read emitted
/// CSVs.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

/// Truth vs estimate panels with agent sample marks.
void render_frame_png(const std::filesystem::path& path, const FieldFrame& truth, const GridD& estimate,
                      const Domain& domain, double f_ocn,
                      const std::vector<std::vector<Vec2>>& agent_marks);

std::string format_double(double v);

}  // namespace plume
