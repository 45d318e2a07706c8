#pragma once

#include <string>

#include "gact/types.hpp"

namespace gact {

// CSV with header `frame,actor,x,y`; frames must be contiguous per actor.
// Parse errors carry the offending line number (and actor/frame for gaps).
Scene load_scene(const std::string& path);
Scene parse_scene_csv(const std::string& text);
std::string scene_csv(const Scene& scene);
void save_scene(const Scene& scene, const std::string& path);

// JSON schema: {actor_count, horizon, root: node}, node = {id, label, start,
// end, participants, children: [{role, members, segments: [node]}]}.
// Loaded trees are validated; key order is canonical for byte-stable output.
ActivityTree load_tree(const std::string& path);
ActivityTree parse_tree_json(const std::string& text);
std::string tree_json(const ActivityTree& tree);
void save_tree(const ActivityTree& tree, const std::string& path);

// One polyline per actor colored by id; with a tree, dashed boxes around
// each physical group's positions at the leaf's middle frame.
std::string render_svg(const Scene& scene, const ActivityTree* tree);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gact
