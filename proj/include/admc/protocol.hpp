/**
 * @file protocol.hpp
 * @brief Session protocol: one JSON object per line.
 *
 * Client to server:
 *   {"type":"input","client":"ui","client_tick":7,"event":{"kind":"Axis","values":[1,0]}}
 *   kinds: Axis, ModeSwitchButton, CycleSuggestion, AcceptSuggestion,
 *          FollowMePose (with "pose":{"position":[x,y,z],"orientation":[w,x,y,z]})
 *
 * Server to client: "hello" once per connection, then "state" every tick,
 * "frame" while replaying, "error" for rejected messages.
 */

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "admc/record_replay.hpp"
#include "admc/session.hpp"

namespace admc {

constexpr int kSessionProtocolVersion = 1;

nlohmann::json pose_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

std::string encode_input(const InputEvent& ev);
/// Throws Error(kProtocol) on malformed JSON, unknown kinds or bad fields.
/// Axis values are range-checked later by Session::submit.
InputEvent decode_input(std::string_view line);

nlohmann::json state_json(const StateUpdate& s);
std::string encode_state(const StateUpdate& s);
std::string encode_hello(const SessionConfig& cfg, std::string_view mode);
std::string encode_error(std::string_view message);
std::string encode_frame(const FrameRecord& f, std::size_t index, std::size_t total);

/// Splits a received text chunk into complete lines; blank lines are dropped.
std::vector<std::string> split_lines(std::string_view text);

}  // namespace admc
