#include "gact/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gact/tree_prior.hpp"

namespace gact {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

[[noreturn]] void csv_error(int line, const std::string& what) {
  throw std::runtime_error("scene csv line " + std::to_string(line) + ": " +
                           what);
}

}  // namespace

Scene parse_scene_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw std::runtime_error("scene csv: empty file");
  ++lineno;
  // Tolerate a trailing \r from CRLF files.
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,actor,x,y")
    csv_error(lineno, "expected header frame,actor,x,y");

  struct Row {
    double x, y;
  };
  std::map<int, std::map<int, Row>> per_actor;  // actor -> frame -> row
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    int frame, actor;
    double x, y;
    char c1, c2, c3;
    if (!(ls >> frame >> c1 >> actor >> c2 >> x >> c3 >> y) || c1 != ',' ||
        c2 != ',' || c3 != ',')
      csv_error(lineno, "malformed row '" + line + "'");
    std::string rest;
    if (ls >> rest) csv_error(lineno, "trailing data '" + rest + "'");
    if (frame < 1) csv_error(lineno, "frame must be >= 1");
    if (per_actor[actor].count(frame))
      csv_error(lineno, "duplicate (frame " + std::to_string(frame) +
                            ", actor " + std::to_string(actor) + ")");
    per_actor[actor][frame] = {x, y};
  }
  if (per_actor.empty()) throw std::runtime_error("scene csv: no data rows");

  Scene scene;
  scene.horizon = 0;
  for (const auto& [actor, rows] : per_actor) {
    if (rows.begin()->first != 1)
      throw std::runtime_error("scene csv: actor " + std::to_string(actor) +
                               " does not start at frame 1");
    int expect = 1;
    for (const auto& [frame, row] : rows) {
      if (frame != expect)
        throw std::runtime_error("scene csv: actor " + std::to_string(actor) +
                                 " missing frame " + std::to_string(expect));
      ++expect;
    }
    const int f = static_cast<int>(rows.size());
    if (scene.horizon == 0) scene.horizon = f;
    if (f != scene.horizon)
      throw std::runtime_error("scene csv: actor " + std::to_string(actor) +
                               " has " + std::to_string(f) +
                               " frames, expected " +
                               std::to_string(scene.horizon));
  }
  for (const auto& [actor, rows] : per_actor) {
    scene.actor_ids.push_back(actor);
    Eigen::Matrix2Xd traj(2, scene.horizon);
    for (const auto& [frame, row] : rows) {
      traj(0, frame - 1) = row.x;
      traj(1, frame - 1) = row.y;
    }
    scene.trajectories.push_back(std::move(traj));
  }
  return scene;
}

std::string scene_csv(const Scene& scene) {
  std::ostringstream os;
  os << "frame,actor,x,y\n";
  os.precision(17);
  for (int t = 1; t <= scene.horizon; ++t)
    for (size_t j = 0; j < scene.actor_ids.size(); ++j)
      os << t << ',' << scene.actor_ids[j] << ','
         << scene.trajectories[j](0, t - 1) << ','
         << scene.trajectories[j](1, t - 1) << '\n';
  return os.str();
}

Scene load_scene(const std::string& path) {
  return parse_scene_csv(read_file(path));
}

void save_scene(const Scene& scene, const std::string& path) {
  write_file(path, scene_csv(scene));
}

namespace {

json node_to_json(const ActivityNode& n) {
  json j;
  j["id"] = n.id;
  j["label"] = to_string(n.label);
  j["start"] = n.start;
  j["end"] = n.end;
  j["participants"] = n.participants;
  json children = json::array();
  for (const auto& seq : n.children) {
    json s;
    s["role"] = to_string(seq.role);
    s["members"] = seq.members;
    json segs = json::array();
    for (const auto& seg : seq.segments) segs.push_back(node_to_json(seg));
    s["segments"] = std::move(segs);
    children.push_back(std::move(s));
  }
  j["children"] = std::move(children);
  return j;
}

ActivityNode node_from_json(const json& j) {
  ActivityNode n;
  n.id = j.at("id").get<int>();
  if (!parse_activity_label(j.at("label").get<std::string>(), &n.label))
    throw std::runtime_error("tree json: unknown label '" +
                             j.at("label").get<std::string>() + "' at node " +
                             std::to_string(n.id));
  n.start = j.at("start").get<int>();
  n.end = j.at("end").get<int>();
  n.participants = j.at("participants").get<std::vector<int>>();
  for (const auto& s : j.at("children")) {
    ChildSequence seq;
    if (!parse_role_label(s.at("role").get<std::string>(), &seq.role))
      throw std::runtime_error("tree json: unknown role '" +
                               s.at("role").get<std::string>() + "' at node " +
                               std::to_string(n.id));
    seq.members = s.at("members").get<std::vector<int>>();
    for (const auto& seg : s.at("segments"))
      seq.segments.push_back(node_from_json(seg));
    n.children.push_back(std::move(seq));
  }
  return n;
}

}  // namespace

std::string tree_json(const ActivityTree& tree) {
  json j;
  j["actor_count"] = tree.actor_count;
  j["horizon"] = tree.horizon;
  j["root"] = node_to_json(tree.root);
  return j.dump(2) + "\n";
}

ActivityTree parse_tree_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("tree json: ") + e.what());
  }
  ActivityTree tree;
  try {
    tree.actor_count = j.at("actor_count").get<int>();
    tree.horizon = j.at("horizon").get<int>();
    tree.root = node_from_json(j.at("root"));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("tree json: ") + e.what());
  }
  ValidationReport report = validate_tree(tree);
  if (!report.ok())
    throw std::runtime_error("tree json: " + report.violations.front());
  return tree;
}

ActivityTree load_tree(const std::string& path) {
  return parse_tree_json(read_file(path));
}

void save_tree(const ActivityTree& tree, const std::string& path) {
  write_file(path, tree_json(tree));
}

namespace {

std::string actor_color(int index) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                  "#bcbd22", "#17becf"};
  return palette[index % 10];
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg(const Scene& scene, const ActivityTree* tree) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& traj : scene.trajectories) {
    xmin = std::min(xmin, traj.row(0).minCoeff());
    xmax = std::max(xmax, traj.row(0).maxCoeff());
    ymin = std::min(ymin, traj.row(1).minCoeff());
    ymax = std::max(ymax, traj.row(1).maxCoeff());
  }
  const double pad = 0.05 * std::max({xmax - xmin, ymax - ymin, 1.0});
  xmin -= pad;
  xmax += pad;
  ymin -= pad;
  ymax += pad;
  const double w = 800.0;
  const double h = 800.0 * (ymax - ymin) / (xmax - xmin);
  const double sx = w / (xmax - xmin);
  const double sy = h / (ymax - ymin);
  auto px = [&](double x) { return (x - xmin) * sx; };
  auto py = [&](double y) { return h - (y - ymin) * sy; };  // y up

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w)
     << "\" height=\"" << fmt(h) << "\" viewBox=\"0 0 " << fmt(w) << ' '
     << fmt(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (tree) {
    for (const ActivityNode* leaf : physical_leaves(*tree)) {
      const int mid = (leaf->start + leaf->end) / 2;
      double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
      for (int actor : leaf->participants) {
        const int j = scene.actor_index(actor);
        const double x = scene.trajectories[j](0, mid - 1);
        const double y = scene.trajectories[j](1, mid - 1);
        bx0 = std::min(bx0, x);
        bx1 = std::max(bx1, x);
        by0 = std::min(by0, y);
        by1 = std::max(by1, y);
      }
      const double m = 0.4 * pad;
      os << "<rect x=\"" << fmt(px(bx0 - m)) << "\" y=\"" << fmt(py(by1 + m))
         << "\" width=\"" << fmt((bx1 - bx0 + 2 * m) * sx) << "\" height=\""
         << fmt((by1 - by0 + 2 * m) * sy)
         << "\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
    }
  }

  for (size_t j = 0; j < scene.trajectories.size(); ++j) {
    os << "<polyline fill=\"none\" stroke=\"" << actor_color(int(j))
       << "\" stroke-width=\"2\" points=\"";
    for (int t = 0; t < scene.horizon; ++t) {
      if (t) os << ' ';
      os << fmt(px(scene.trajectories[j](0, t))) << ','
         << fmt(py(scene.trajectories[j](1, t)));
    }
    os << "\"/>\n";
    os << "<circle cx=\"" << fmt(px(scene.trajectories[j](0, scene.horizon - 1)))
       << "\" cy=\"" << fmt(py(scene.trajectories[j](1, scene.horizon - 1)))
       << "\" r=\"4\" fill=\"" << actor_color(int(j)) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace gact
