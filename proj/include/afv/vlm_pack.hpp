#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace afv {

enum class PromptMode {
  conventional,          // RGB video + stereo audio
  conventional_plus_af,  // stacked RGB / acoustic-field video + stereo audio
  live,                  // acoustic-field prompt without the closing question sentence
};

std::string to_string(PromptMode mode);
PromptMode parse_prompt_mode(const std::string& text);

/// Prompt blocks joined by '\n', followed by the question. Conventional mode
/// omits the sound-pressure-map paragraph. Live mode drops the final
/// "Using this information..." sentence and accepts an empty question.
std::string build_prompt(PromptMode mode, std::string_view question);

struct MediaRefs {
  std::string frames_manifest;  // manifest.json of the rendered frame sequence
  std::string stereo_audio;     // 2-channel WAV

  friend bool operator==(const MediaRefs&, const MediaRefs&) = default;
};

struct RequestManifest {
  PromptMode mode = PromptMode::conventional;
  std::string prompt;
  std::string question;
  MediaRefs media;

  std::string to_json() const;
  /// Throws parse/schema errors; also checks the prompt matches build_prompt().
  static RequestManifest from_json(std::string_view text);

  friend bool operator==(const RequestManifest&, const RequestManifest&) = default;
};

/// Throws packaging error naming the first referenced media path that does not exist.
RequestManifest package_request(PromptMode mode, const MediaRefs& media, std::string_view question);

struct VlmResponse {
  std::string question;
  std::string text;
};

/// One inference session; a session serves exactly one request.
class VlmSession {
 public:
  virtual ~VlmSession() = default;
  virtual VlmResponse send(const RequestManifest& request) = 0;
};

class VlmTransport {
 public:
  virtual ~VlmTransport() = default;
  virtual std::unique_ptr<VlmSession> open_session() = 0;
};

/// Offline transport: answers with a canned response keyed by question, or
/// an echo of the question when none is registered.
class MockTransport : public VlmTransport {
 public:
  explicit MockTransport(std::unordered_map<std::string, std::string> canned = {});

  std::unique_ptr<VlmSession> open_session() override;
  std::size_t sessions_opened() const noexcept { return sessions_->load(); }

 private:
  std::shared_ptr<const std::unordered_map<std::string, std::string>> canned_;
  std::shared_ptr<std::atomic<std::size_t>> sessions_;
};

/// Sends each request through a fresh session; responses come back in request order.
std::vector<VlmResponse> dispatch(VlmTransport& transport, std::span<const RequestManifest> requests);

}  // namespace afv
