#include "adgen/backend/mock.hpp"
#include "adgen/caption.hpp"
#include "adgen/errors.hpp"
#include "adgen/text_util.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace adgen;

namespace {

class Reply : public backend::LanguageModel {
public:
  explicit Reply(std::string text, bool fail = false) : text_(std::move(text)), fail_(fail) {}
  std::string respond(const backend::TextCompletionRequest &req, std::string_view) override {
    last = req;
    if (fail_)
      throw BackendError(BackendErrorKind::Timeout, "slow");
    return text_;
  }
  backend::TextCompletionRequest last;

private:
  std::string text_;
  bool fail_;
};

std::shared_ptr<backend::StructuredCompleter> completer(std::shared_ptr<backend::LanguageModel> m) {
  return std::make_shared<backend::StructuredCompleter>(std::move(m), 3);
}

const MarketingBrief kShoe{"shoe", "urban street", "sunset", "Shoe on an urban street at sunset"};

} // namespace

TEST_CASE("template caption snapshot") {
  CHECK(template_caption(kShoe) == "shoe placed in urban street, sunset atmosphere, professional marketing photo");
  CHECK(template_caption({"mug", "", "", "mug"}) == "mug, professional marketing photo");
  CHECK(template_caption({"lamp", "", "winter", "x"}) == "lamp, winter atmosphere, professional marketing photo");
}

TEST_CASE("caption from the brief alone") {
  CaptionGenerator gen(completer(std::make_shared<backend::MockLanguageModel>()));
  const auto c = gen.generate(kShoe, nullptr);
  CHECK_FALSE(c.fallback);
  CHECK_FALSE(c.derived_from_background);
  CHECK(c.text.find("shoe") != std::string::npos);
  CHECK(c.text.find("urban street") != std::string::npos);
  CHECK(c.brief_ref == brief_id(kShoe));
  CHECK(c.brief_ref.size() == 16);
}

TEST_CASE("caption with a background attaches the raster") {
  auto model = std::make_shared<Reply>(R"({"caption": "A Shoe on wet asphalt"})");
  CaptionGenerator gen(completer(model));
  Asset bg{"bg1", AssetKind::Background, testing::random_rgb(16, 16, 2), {}, "wet street", ""};
  const auto c = gen.generate(kShoe, &bg);
  CHECK(c.derived_from_background);
  CHECK_FALSE(c.fallback);
  CHECK(c.text == "A Shoe on wet asphalt");
  REQUIRE(model->last.attached_images.size() == 1);
  CHECK(model->last.attached_images[0] == bg.raster);
  CHECK(model->last.user_content.find("background_label: wet street") != std::string::npos);
}

TEST_CASE("backend failure yields the template exactly") {
  CaptionGenerator gen(completer(std::make_shared<Reply>("", true)));
  const auto c = gen.generate(kShoe, nullptr);
  CHECK(c.fallback);
  CHECK(c.text == "shoe placed in urban street, sunset atmosphere, professional marketing photo");
  CHECK(c.fallback_reason.find("timeout") != std::string::npos);
}

TEST_CASE("a caption that forgets the product falls back") {
  CaptionGenerator gen(completer(std::make_shared<Reply>(R"({"caption": "a lovely street"})")));
  const auto c = gen.generate(kShoe, nullptr);
  CHECK(c.fallback);
  CHECK(c.text == template_caption(kShoe));
}

TEST_CASE("captions are capped by word count") {
  CHECK(cap_words("  one two   three four ", 2) == "one two");
  CHECK(cap_words("one", 5) == "one");
  CaptionGenerator gen(completer(std::make_shared<backend::MockLanguageModel>()), CaptionOptions{4});
  const auto c = gen.generate(kShoe, nullptr);
  CHECK(c.fallback); // the cut removed the product
  CHECK(c.text == "shoe placed in urban");
}

TEST_CASE("every generated caption mentions the product") {
  CaptionGenerator gen(completer(std::make_shared<backend::MockLanguageModel>()));
  for (const char *product : {"Red Mug", "leather sofa", "watch"})
    for (const char *bg : {"", "kitchen counter"})
      for (const char *theme : {"", "christmas"}) {
        const MarketingBrief b{product, bg, theme, "p"};
        const auto c = gen.generate(b, nullptr);
        CHECK_FALSE(c.text.empty());
        CHECK(text::contains_ci(c.text, product));
      }
}

TEST_CASE("caption json round trip") {
  SceneCaption c{"text", true, "abc", true, "why"};
  const nlohmann::json j = c;
  CHECK(j.get<SceneCaption>() == c);
}
