#pragma once

#include "json.hpp"
#include "refnav/episode.hpp"

namespace refnav {

using ojson = nlohmann::ordered_json;

ojson bbox_to_json(const BBox2D& b);
BBox2D bbox_from_json(const ojson& j);

ojson detection_to_json(const Detection& d);
Detection detection_from_json(const ojson& j);

ojson action_to_json(const Action& a);
Action action_from_json(const ojson& j);

ojson trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const ojson& j);

ojson projected_to_json(const ProjectedObject& p);
ProjectedObject projected_from_json(const ojson& j, const std::string& viewpoint);

ojson observation_to_json(const Observation& obs);
Observation observation_from_json(const ojson& j);

}  // namespace refnav
