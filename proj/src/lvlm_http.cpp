#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "xvg/caption.hpp"
#include "xvg/error.hpp"

namespace xvg::caption {

using json = nlohmann::json;

namespace {

std::string base64(const std::vector<unsigned char>& bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = bytes[i] << 16 | bytes[i + 1] << 8 | bytes[i + 2];
    out += kAlphabet[v >> 18 & 63];
    out += kAlphabet[v >> 12 & 63];
    out += kAlphabet[v >> 6 & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    unsigned v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kAlphabet[v >> 18 & 63];
    out += kAlphabet[v >> 12 & 63];
    out += i + 1 < bytes.size() ? kAlphabet[v >> 6 & 63] : '=';
    out += '=';
  }
  return out;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

HttpLvlmClient::HttpLvlmClient(std::string endpoint, std::string api_key, std::string model)
    : api_key_(std::move(api_key)), model_(std::move(model)) {
  // Split "scheme://host[:port]/path" into the client base and request path.
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ArgumentError("LVLM endpoint must be a URL: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : endpoint.substr(slash);
}

std::unique_ptr<HttpLvlmClient> HttpLvlmClient::from_environment(const std::string& endpoint) {
  const std::string url = endpoint.empty() ? env_or("XVG_LVLM_ENDPOINT", "") : endpoint;
  if (url.empty()) throw ArgumentError("no LVLM endpoint: pass --client <url> or set XVG_LVLM_ENDPOINT");
  return std::make_unique<HttpLvlmClient>(url, env_or("XVG_LVLM_API_KEY", ""), env_or("XVG_LVLM_MODEL", "qwen2.5-vl"));
}

std::vector<std::string> HttpLvlmClient::complete(const ImageTensor& image, std::span<const Prompt> prompts) {
  httplib::Client client(base_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string data_url = "data:image/png;base64," + base64(encode_png(image));
  json messages = json::array();
  std::vector<std::string> answers;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    json content = json::array();
    if (i == 0) content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url}}}});
    content.push_back({{"type", "text"}, {"text", prompts[i].text}});
    messages.push_back({{"role", "user"}, {"content", content}});

    const json body = {{"model", model_}, {"messages", messages}, {"temperature", 0}};
    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw ProtocolError("LVLM request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw ProtocolError("LVLM endpoint returned HTTP " + std::to_string(res->status));
    }
    std::string text;
    try {
      text = json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("malformed LVLM response: ") + e.what());
    }
    messages.push_back({{"role", "assistant"}, {"content", text}});
    answers.push_back(std::move(text));
  }
  return answers;
}

}  // namespace xvg::caption
