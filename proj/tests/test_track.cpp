#include <filesystem>
#include <functional>

#include "doctest.h"
#include "rcvr/error.hpp"
#include "rcvr/io.hpp"
#include "rcvr/track.hpp"
#include "support.hpp"

using namespace rcvr;
using rcvr::test::flat_track;

namespace {

std::string two_point_file() {
  return R"({"format_version":1,"id":"tiny","coaster_type":0,"dt":0.1,"points":[
{"p":[0,0,0],"f":[1,0,0],"u":[0,1,0],"v":3,"g":[0,0,1]},
{"p":[0.3,0,0],"f":[1,0,0],"u":[0,1,0],"v":3,"g":[0,0,1]}]})";
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("track") {
  TEST_CASE("minimal two-point file parses") {
    const Track t = parse_track(two_point_file());
    CHECK(t.points.size() == 2);
    CHECK(t.id == "tiny");
    CHECK(t.coaster_type == CoasterType::Gentle);
    CHECK(t.points[1].position == Vec3{0.3, 0.0, 0.0});
  }

  TEST_CASE("negative speed names the invariant and the point") {
    Track t = flat_track(3.0, 10);
    t.points[5].speed = -1.0;
    try {
      parse_track(serialize_track(t));
      FAIL("accepted a negative speed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvariantViolation);
      CHECK(e.detail() == "speed >= 0");
      REQUIRE(e.index().has_value());
      CHECK(*e.index() == 5);
    }
  }

  TEST_CASE("frame invariants") {
    Track t = flat_track(3.0, 5);
    t.points[2].up = {0.0, 0.0, 1.0};
    t.points[2].forward = {0.0, 0.0, 1.0};
    CHECK(code_of([&] { validate(t); }) == ErrorCode::InvariantViolation);

    t = flat_track(3.0, 5);
    t.points[3].forward = {2.0, 0.0, 0.0};
    CHECK(code_of([&] { validate(t); }) == ErrorCode::InvariantViolation);
  }

  TEST_CASE("sampling consistency and length") {
    Track t = flat_track(3.0, 5);
    t.points[4].position.x += 5.0;
    CHECK(code_of([&] { validate(t); }) == ErrorCode::InvariantViolation);

    Track still = flat_track(3.0, 3);
    for (auto& p : still.points) p.position = {};
    CHECK(code_of([&] { validate(still); }) == ErrorCode::InvariantViolation);

    Track bad_dt = flat_track(3.0, 3);
    bad_dt.dt = 0.0;
    CHECK(code_of([&] { validate(bad_dt); }) == ErrorCode::InvariantViolation);
  }

  TEST_CASE("syntax errors") {
    CHECK(code_of([] { parse_track("{"); }) == ErrorCode::MalformedSyntax);
    CHECK(code_of([] { parse_track("[]"); }) == ErrorCode::MalformedSyntax);
    std::string extra = two_point_file();
    extra.insert(1, "\"colour\":\"red\",");
    CHECK(code_of([&] { parse_track(extra); }) == ErrorCode::MalformedSyntax);
    std::string text_speed = two_point_file();
    text_speed.replace(text_speed.find("\"v\":3"), 5, "\"v\":\"3\"");
    CHECK(code_of([&] { parse_track(text_speed); }) == ErrorCode::MalformedSyntax);
  }

  TEST_CASE("unsupported version") {
    std::string v2 = two_point_file();
    v2.replace(v2.find("\"format_version\":1"), 18, "\"format_version\":2");
    CHECK(code_of([&] { parse_track(v2); }) == ErrorCode::VersionUnsupported);
  }

  TEST_CASE("serialization is canonical and stable") {
    const Track t = parse_track(two_point_file());
    const std::string a = serialize_track(t);
    CHECK(a == serialize_track(t));
    CHECK(serialize_track(parse_track(a)) == a);
    CHECK(parse_track(a) == t);
  }

  TEST_CASE("round trip preserves every double bit") {
    Rng rng(11);
    for (int i = 0; i < 5; ++i) {
      const Track t = test::random_track(rng, "r" + std::to_string(i));
      const Track back = parse_track(serialize_track(t));
      CHECK(back == t);
    }
  }

  TEST_CASE("save and load through the file system") {
    const auto dir = test::temp_dir("track-io");
    const Track t = flat_track(4.0, 20);
    save_track(t, dir + "/flat.rcvr.json");
    CHECK(load_track(dir + "/flat.rcvr.json") == t);
    CHECK(code_of([&] { load_track(dir + "/missing.rcvr.json"); }) == ErrorCode::IoError);
  }

  TEST_CASE("relative positions") {
    Track t;
    t.points.resize(2);
    t.points[1].position = {1.0, 0.0, 0.0};
    const auto rel = relative_positions(t);
    REQUIRE(rel.size() == 1);
    CHECK(rel[0] == Vec3{1.0, 0.0, 0.0});

    t.points[1].position = {};
    CHECK(relative_positions(t)[0] == Vec3{});

    t.points.resize(1);
    CHECK(code_of([&] { relative_positions(t); }) == ErrorCode::TooShort);
  }

  TEST_CASE("relative positions telescope to the displacement") {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
      const Track t = test::random_track(rng, "tele");
      Vec3 sum;
      for (const auto& d : relative_positions(t)) sum += d;
      const Vec3 direct = t.points.back().position - t.points.front().position;
      CHECK((sum - direct).norm() <= 1e-9 * (1.0 + direct.norm()));
    }
  }
}
