#include "afv/vlm_pack.hpp"

#include <filesystem>

#include <nlohmann/json.hpp>

#include "afv/error.hpp"

namespace afv {

namespace {

using nlohmann::json;

constexpr std::string_view kPreamble =
    "Be definitive in your answers. Avoid hedging words like \"potentially\", \"possibly\", or \"probably\", "
    "and other speculative language. Also, answer concisely; one or a few sentences at most. I am giving you a "
    "video clip with audio of a scene.";

constexpr std::string_view kAcousticFieldParagraph =
    "The video clip has two synchronized visualizations of the same camera view. The top is the standard video "
    "of the scene. Bottom is the same video, but overlaid with a sound pressure map (jet color scheme, e.g., "
    "blue is no or low sound, and oranges and reds are louder sound sources). The sound pressure map shows "
    "where sounds are coming from. Your answer should not explicitly mention the video or the sound pressure "
    "map.";

constexpr std::string_view kQuestionLead = "Using this information, I want you to answer the following question:";

class MockSession : public VlmSession {
 public:
  explicit MockSession(std::shared_ptr<const std::unordered_map<std::string, std::string>> canned)
      : canned_(std::move(canned)) {}

  VlmResponse send(const RequestManifest& request) override {
    if (used_) throw Error(ErrorKind::argument, "a VLM session serves exactly one request");
    used_ = true;
    if (auto it = canned_->find(request.question); it != canned_->end()) return {request.question, it->second};
    return {request.question, "mock answer: " + request.question};
  }

 private:
  std::shared_ptr<const std::unordered_map<std::string, std::string>> canned_;
  bool used_ = false;
};

std::string require_string(const json& doc, const std::string& path) {
  const auto slash = path.find('.');
  const json* node = &doc;
  std::string key = path;
  if (slash != std::string::npos) {
    auto parent = doc.find(path.substr(0, slash));
    if (parent == doc.end() || !parent->is_object()) {
      throw Error(ErrorKind::schema, "$." + path.substr(0, slash) + ": expected an object");
    }
    node = &*parent;
    key = path.substr(slash + 1);
  }
  auto it = node->find(key);
  if (it == node->end() || !it->is_string()) throw Error(ErrorKind::schema, "$." + path + ": expected a string");
  return it->get<std::string>();
}

}  // namespace

std::string to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::conventional: return "conventional";
    case PromptMode::conventional_plus_af: return "conventional_plus_af";
    case PromptMode::live: return "live";
  }
  return "conventional";
}

PromptMode parse_prompt_mode(const std::string& text) {
  if (text == "conventional") return PromptMode::conventional;
  if (text == "conventional_plus_af" || text == "af") return PromptMode::conventional_plus_af;
  if (text == "live") return PromptMode::live;
  throw Error(ErrorKind::argument, "unknown prompt mode '" + text + "' (conventional, conventional_plus_af, live)");
}

std::string build_prompt(PromptMode mode, std::string_view question) {
  if (question.empty() && mode != PromptMode::live) {
    throw Error(ErrorKind::argument, "prompt question must not be empty");
  }
  std::string prompt(kPreamble);
  if (mode != PromptMode::conventional) {
    prompt += '\n';
    prompt += kAcousticFieldParagraph;
  }
  if (mode != PromptMode::live) {
    prompt += '\n';
    prompt += kQuestionLead;
  }
  if (!question.empty()) {
    prompt += '\n';
    prompt += question;
  }
  return prompt;
}

std::string RequestManifest::to_json() const {
  json doc{{"schema", 1},
           {"mode", afv::to_string(mode)},
           {"question", question},
           {"prompt", prompt},
           {"media", {{"frames_manifest", media.frames_manifest}, {"stereo_audio", media.stereo_audio}}}};
  return doc.dump(2);
}

RequestManifest RequestManifest::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("request manifest: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", 0) != 1) throw Error(ErrorKind::schema, "$.schema: expected 1");
  RequestManifest m;
  try {
    m.mode = parse_prompt_mode(require_string(doc, "mode"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::argument) throw Error(ErrorKind::schema, std::string("$.mode: ") + e.what());
    throw;
  }
  m.question = require_string(doc, "question");
  m.prompt = require_string(doc, "prompt");
  m.media.frames_manifest = require_string(doc, "media.frames_manifest");
  m.media.stereo_audio = require_string(doc, "media.stereo_audio");
  if (m.prompt != build_prompt(m.mode, m.question)) {
    throw Error(ErrorKind::schema, "$.prompt: does not match the prompt for mode " + afv::to_string(m.mode));
  }
  return m;
}

RequestManifest package_request(PromptMode mode, const MediaRefs& media, std::string_view question) {
  for (const std::string& path : {media.frames_manifest, media.stereo_audio}) {
    if (path.empty() || !std::filesystem::exists(path)) {
      throw Error(ErrorKind::packaging, "missing media file: " + (path.empty() ? "<unset>" : path));
    }
  }
  return {mode, build_prompt(mode, question), std::string(question), media};
}

MockTransport::MockTransport(std::unordered_map<std::string, std::string> canned)
    : canned_(std::make_shared<const std::unordered_map<std::string, std::string>>(std::move(canned))),
      sessions_(std::make_shared<std::atomic<std::size_t>>(0)) {}

std::unique_ptr<VlmSession> MockTransport::open_session() {
  sessions_->fetch_add(1);
  return std::make_unique<MockSession>(canned_);
}

std::vector<VlmResponse> dispatch(VlmTransport& transport, std::span<const RequestManifest> requests) {
  std::vector<VlmResponse> responses;
  responses.reserve(requests.size());
  for (const auto& request : requests) {
    auto session = transport.open_session();
    responses.push_back(session->send(request));
  }
  return responses;
}

}  // namespace afv
