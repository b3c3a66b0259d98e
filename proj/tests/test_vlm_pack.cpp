#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "afv/vlm_pack.hpp"
#include "test_support.hpp"

using namespace afv;

namespace {

const std::string kGoldenPlusAf =
    "Be definitive in your answers. Avoid hedging words like \"potentially\", \"possibly\", or \"probably\", and "
    "other speculative language. Also, answer concisely; one or a few sentences at most. I am giving you a video "
    "clip with audio of a scene.\n"
    "The video clip has two synchronized visualizations of the same camera view. The top is the standard video of "
    "the scene. Bottom is the same video, but overlaid with a sound pressure map (jet color scheme, e.g., blue is "
    "no or low sound, and oranges and reds are louder sound sources). The sound pressure map shows where sounds "
    "are coming from. Your answer should not explicitly mention the video or the sound pressure map.\n"
    "Using this information, I want you to answer the following question:\n"
    "Is the printer on the left running?";

MediaRefs touch_media(const std::filesystem::path& dir) {
  std::ofstream(dir / "manifest.json") << "{}";
  std::ofstream(dir / "stereo.wav") << "RIFF";
  return {(dir / "manifest.json").string(), (dir / "stereo.wav").string()};
}

}  // namespace

TEST_SUITE("vlm_pack") {

TEST_CASE("conventional plus acoustic field prompt is byte exact") {
  CHECK(build_prompt(PromptMode::conventional_plus_af, "Is the printer on the left running?") == kGoldenPlusAf);
}

TEST_CASE("conventional prompt omits the sound pressure paragraph") {
  const std::string p = build_prompt(PromptMode::conventional, "What is making noise?");
  CHECK(p.find("sound pressure map") == std::string::npos);
  CHECK(p.rfind("Be definitive", 0) == 0);
  CHECK(p.size() > 21);
  CHECK(p.substr(p.size() - 22) == "\nWhat is making noise?");
  CHECK(p.find("scene.\nUsing this information") != std::string::npos);
}

TEST_CASE("live prompt drops the closing sentence") {
  const std::string p = build_prompt(PromptMode::live, "");
  CHECK(p.find("Using this information") == std::string::npos);
  CHECK(p.find("sound pressure map.") != std::string::npos);
  CHECK(p.back() == '.');
  CHECK(build_prompt(PromptMode::live, "Where?") == p + "\nWhere?");
}

TEST_CASE("empty question rejected outside live mode") {
  CHECK(test::error_kind_of([] { build_prompt(PromptMode::conventional, ""); }) == ErrorKind::argument);
  CHECK(test::error_kind_of([] { build_prompt(PromptMode::conventional_plus_af, ""); }) == ErrorKind::argument);
}

TEST_CASE("modes parse") {
  for (auto m : {PromptMode::conventional, PromptMode::conventional_plus_af, PromptMode::live}) {
    CHECK(parse_prompt_mode(to_string(m)) == m);
  }
  CHECK(test::error_kind_of([] { parse_prompt_mode("audio_only"); }) == ErrorKind::argument);
}

TEST_CASE("package and round trip a request") {
  const auto dir = test::scratch_dir("vlm_pack");
  const MediaRefs media = touch_media(dir);
  const RequestManifest r = package_request(PromptMode::conventional_plus_af, media, "Is the printer on the left running?");
  CHECK(r.prompt == kGoldenPlusAf);
  CHECK(RequestManifest::from_json(r.to_json()) == r);

  auto doc = nlohmann::json::parse(r.to_json());
  doc["prompt"] = "tampered";
  CHECK(test::error_kind_of([&] { RequestManifest::from_json(doc.dump()); }) == ErrorKind::schema);
  doc = nlohmann::json::parse(r.to_json());
  doc["mode"] = "radio";
  CHECK(test::error_kind_of([&] { RequestManifest::from_json(doc.dump()); }) == ErrorKind::schema);
  CHECK(test::error_kind_of([&] { RequestManifest::from_json("[1,"); }) == ErrorKind::parse);
}

TEST_CASE("missing media is a packaging error naming the path") {
  const auto dir = test::scratch_dir("vlm_missing");
  MediaRefs media = touch_media(dir);
  media.stereo_audio = (dir / "absent.wav").string();
  try {
    package_request(PromptMode::conventional, media, "q");
    FAIL("missing media accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::packaging);
    CHECK(std::string(e.what()) == "missing media file: " + media.stereo_audio);
  }
}

TEST_CASE("mock transport opens one session per request") {
  const auto dir = test::scratch_dir("vlm_mock");
  const MediaRefs media = touch_media(dir);
  MockTransport transport(std::unordered_map<std::string, std::string>{{"Which machine is loud?", "The left printer."}});
  const std::vector<RequestManifest> requests{
      package_request(PromptMode::conventional, media, "Which machine is loud?"),
      package_request(PromptMode::conventional_plus_af, media, "Is anything running?"),
      package_request(PromptMode::live, media, "")};
  const auto responses = dispatch(transport, requests);
  REQUIRE(responses.size() == 3);
  CHECK(transport.sessions_opened() == 3);
  CHECK(responses[0].text == "The left printer.");
  CHECK(responses[1].text == "mock answer: Is anything running?");
  CHECK(responses[1].question == "Is anything running?");

  auto session = transport.open_session();
  session->send(requests[0]);
  CHECK(test::error_kind_of([&] { session->send(requests[1]); }) == ErrorKind::argument);
}

}  // TEST_SUITE
