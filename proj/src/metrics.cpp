#include "marlnav/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace marlnav {

double goal_rate(int episodes, int agent_goals) {
  if (episodes < 0 || agent_goals < 0 || agent_goals > 2 * episodes) {
    throw std::invalid_argument("agent_goals must lie in [0, 2*episodes]");
  }
  if (episodes == 0) return 0.0;
  return static_cast<double>(agent_goals) / (2.0 * episodes);
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
  if (window < 1) {
    throw std::invalid_argument("window must be >= 1");
  }
  std::vector<double> out(series.size());
  for (size_t k = 0; k < series.size(); ++k) {
    size_t lo = k + 1 >= static_cast<size_t>(window) ? k + 1 - window : 0;
    double sum = 0.0;
    for (size_t i = lo; i <= k; ++i) sum += series[i];
    out[k] = sum / static_cast<double>(k - lo + 1);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

std::string format_row(const IterationMetricsRow& r) {
  std::ostringstream os;
  os << r.iteration << ',' << r.stage << ',' << r.episodes << ',' << r.agent_goals
     << ',' << format_double(r.goal_rate) << ',' << format_double(r.ma10_goal_rate)
     << ',' << format_double(r.mean_episode_reward) << ','
     << format_double(r.policy_loss) << ',' << format_double(r.value_loss) << ','
     << format_double(r.entropy);
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void write_metrics_csv(const std::vector<IterationMetricsRow>& rows,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write metrics file: " + path);
  }
  out << kMetricsCsvHeader << '\n';
  for (const IterationMetricsRow& r : rows) out << format_row(r) << '\n';
}

std::vector<IterationMetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open metrics file: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw std::runtime_error("bad metrics header in " + path);
  }
  std::vector<IterationMetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 10) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected 10 fields");
    }
    IterationMetricsRow r;
    try {
      r.iteration = std::stoi(f[0]);
      r.stage = f[1];
      r.episodes = std::stoi(f[2]);
      r.agent_goals = std::stoi(f[3]);
      r.goal_rate = std::stod(f[4]);
      r.ma10_goal_rate = std::stod(f[5]);
      r.mean_episode_reward = std::stod(f[6]);
      r.policy_loss = std::stod(f[7]);
      r.value_loss = std::stod(f[8]);
      r.entropy = std::stod(f[9]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": numeric parse failure");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path) {
  if (!out_) {
    throw std::runtime_error("cannot write metrics file: " + path);
  }
  out_ << kMetricsCsvHeader << '\n';
  out_.flush();
}

void MetricsWriter::append(const IterationMetricsRow& row) {
  out_ << format_row(row) << '\n';
  out_.flush();
}

void write_trajectory_csv(const std::vector<TrajectoryRow>& rows,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write trajectory file: " + path);
  }
  out << kTrajectoryCsvHeader << '\n';
  for (const TrajectoryRow& r : rows) {
    out << r.episode << ',' << r.step << ',' << r.agent << ',' << format_double(r.x)
        << ',' << format_double(r.y) << ',' << format_double(r.yaw) << ',' << r.action
        << ',' << format_double(r.reward) << ',' << r.event << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open trajectory file: " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryCsvHeader) {
    throw std::runtime_error(path + ": line 1: bad trajectory header");
  }
  std::vector<TrajectoryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 9) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected 9 fields");
    }
    TrajectoryRow r;
    try {
      r.episode = std::stoi(f[0]);
      r.step = std::stoi(f[1]);
      r.agent = std::stoi(f[2]);
      r.x = std::stod(f[3]);
      r.y = std::stod(f[4]);
      r.yaw = std::stod(f[5]);
      r.action = std::stoi(f[6]);
      r.reward = std::stod(f[7]);
      r.event = f[8];
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": numeric parse failure");
    }
    if (r.agent != 1 && r.agent != 2) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": agent must be 1 or 2");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

constexpr double kPxPerMeter = 20.0;

}  // namespace

void render_trajectory_svg(const std::vector<TrajectoryRow>& rows,
                           const WorldMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write svg file: " + path);
  }
  const double w = map.width * kPxPerMeter;
  const double h = map.height * kPxPerMeter;
  auto px = [](double m) { return format_double(m * kPxPerMeter); };
  auto py = [&map](double m) { return format_double((map.height - m) * kPxPerMeter); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(w)
      << "\" height=\"" << format_double(h) << "\" viewBox=\"0 0 " << format_double(w)
      << " " << format_double(h) << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << format_double(w) << "\" height=\""
      << format_double(h) << "\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>\n";
  for (const Rect& r : map.obstacles) {
    out << "  <rect x=\"" << px(r.x_min) << "\" y=\"" << py(r.y_max) << "\" width=\""
        << format_double((r.x_max - r.x_min) * kPxPerMeter) << "\" height=\""
        << format_double((r.y_max - r.y_min) * kPxPerMeter) << "\" fill=\"#777777\"/>\n";
  }
  for (const Point2& c : map.spawn_cells) {
    out << "  <rect x=\"" << format_double(c.x * kPxPerMeter - 4) << "\" y=\""
        << format_double((map.height - c.y) * kPxPerMeter - 4)
        << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"red\"/>\n";
  }

  // One polyline per (episode, agent). Rows are expected grouped that way.
  static const char* kAgentColor[2] = {"#1f77b4", "#ff7f0e"};
  size_t i = 0;
  while (i < rows.size()) {
    size_t j = i;
    while (j < rows.size() && rows[j].episode == rows[i].episode &&
           rows[j].agent == rows[i].agent) {
      ++j;
    }
    const char* color = kAgentColor[(rows[i].agent - 1) & 1];
    out << "  <polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t k = i; k < j; ++k) {
      if (k > i) out << ' ';
      out << px(rows[k].x) << ',' << py(rows[k].y);
    }
    out << "\"/>\n";
    out << "  <circle cx=\"" << px(rows[i].x) << "\" cy=\"" << py(rows[i].y)
        << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    out << "  <rect x=\"" << format_double(rows[j - 1].x * kPxPerMeter - 3) << "\" y=\""
        << format_double((map.height - rows[j - 1].y) * kPxPerMeter - 3)
        << "\" width=\"6\" height=\"6\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    i = j;
  }
  out << "</svg>\n";
}

}  // namespace marlnav
