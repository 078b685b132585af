#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "marlnav/worldmap.hpp"

namespace marlnav {

/// One metrics.csv row. goal_rate is per agent task: goals / (2 * episodes).
struct IterationMetricsRow {
  int iteration = 0;
  std::string stage;
  int episodes = 0;
  int agent_goals = 0;
  double goal_rate = 0.0;
  double ma10_goal_rate = 0.0;
  double mean_episode_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "iteration,stage,episodes,agent_goals,goal_rate,ma10_goal_rate,"
    "mean_episode_reward,policy_loss,value_loss,entropy";

/// agent_goals / (2 * episodes); 0 when no episodes completed.
/// Throws when agent_goals exceeds 2 * episodes.
double goal_rate(int episodes, int agent_goals);

/// Trailing-window mean: element k averages elements max(0, k-window+1)..k.
std::vector<double> moving_average(const std::vector<double>& series, int window = 10);

/// 12-significant-digit decimal used everywhere numbers are persisted.
std::string format_double(double v);

void write_metrics_csv(const std::vector<IterationMetricsRow>& rows,
                       const std::string& path);
std::vector<IterationMetricsRow> read_metrics_csv(const std::string& path);

/// Incremental writer used during training; one flushed row per iteration.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const IterationMetricsRow& row);

 private:
  std::ofstream out_;
};

/// One trajectory log row per (step, agent). Agents are numbered 1 and 2.
struct TrajectoryRow {
  int episode = 0;
  int step = 0;
  int agent = 0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  int action = 0;
  double reward = 0.0;
  std::string event = "none";
};

inline constexpr const char* kTrajectoryCsvHeader =
    "episode,step,agent,x,y,yaw,action,reward,event";

void write_trajectory_csv(const std::vector<TrajectoryRow>& rows,
                          const std::string& path);

/// Parse failures report the offending 1-based line number.
std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);

/// Draws the arena, obstacles, spawn cells, and one polyline per
/// (episode, agent) with start/end markers. 20 px per meter.
void render_trajectory_svg(const std::vector<TrajectoryRow>& rows,
                           const WorldMap& map, const std::string& path);

}  // namespace marlnav
