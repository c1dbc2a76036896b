#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <variant>

#include "fidcurve/config.hpp"
#include "helpers.hpp"

using fidcurve::ConfigError;
using fidcurve::Json;

namespace {
Json base_doc() {
  return Json{
      {"curve", {{"mu1", "t^3"}, {"mu2", "t"}, {"t_min", -2.0}, {"t_max", 2.0}}},
      {"noise", {{"cov", {{1.0, 0.0}, {0.0, 1.0}}}}},
      {"observation", {0.5, -0.25}},
      {"prior", {{"type", "jeffreys"}}},
      {"output",
       {{"grid_points", 101},
        {"quantiles", {0.25, 0.5, 0.75}},
        {"n_samples", 100},
        {"seed", 7}}}};
}

// Runs the parser and returns the dotted path of the rejection.
std::string reject_path(const Json& doc) {
  try {
    fidcurve::parse_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  FAIL("config unexpectedly accepted");
  return {};
}
}  // namespace

TEST_CASE("a complete document parses into a validated problem") {
  Json doc = base_doc();
  doc["prior"] = {{"type", "shift"}, {"d", {1.0, 0.0}}};
  doc["oracle"] = {{"kind", "slab"},
                   {"d", {1.0, 0.0}},
                   {"epsilon", 0.01},
                   {"n_proposed", 1000},
                   {"seed", 99}};
  const auto pc = fidcurve::parse_config(doc);
  CHECK(pc.curve.interval().t_min == -2.0);
  CHECK(pc.curve.interval().t_max == 2.0);
  CHECK(pc.curve.point(1.5).x == Catch::Approx(3.375));
  CHECK(pc.x.x == 0.5);
  CHECK(pc.x.y == -0.25);
  CHECK(std::holds_alternative<fidcurve::ShiftPrior>(pc.prior));
  CHECK(pc.output.grid_points == 101);
  CHECK(pc.output.quantiles == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(pc.output.n_samples == 100);
  CHECK(pc.output.seed == 7);
  CHECK(pc.output.tolerance == 1e-10);
  REQUIRE(pc.oracle.has_value());
  CHECK(pc.oracle->kind == fidcurve::OracleKind::Slab);
  CHECK(pc.oracle->d.x == 1.0);
  CHECK(pc.oracle->epsilon == 0.01);
  CHECK(pc.oracle->n_proposed == 1000);
  CHECK(pc.oracle->seed == 99);
  CHECK(pc.echo == doc);
}

TEST_CASE("every prior type round trips") {
  Json doc = base_doc();
  doc["prior"] = {{"type", "jeffreys"}};
  CHECK(std::holds_alternative<fidcurve::JeffreysPrior>(
      fidcurve::parse_config(doc).prior));
  doc["prior"] = {{"type", "linear"}, {"c", {2.0, -1.0}}};
  CHECK(std::holds_alternative<fidcurve::LinearPrior>(
      fidcurve::parse_config(doc).prior));
  doc["prior"] = {{"type", "shift"}, {"d", {0.0, 1.0}}};
  CHECK(std::holds_alternative<fidcurve::ShiftPrior>(
      fidcurve::parse_config(doc).prior));
  doc["prior"] = {{"type", "condition"},
                  {"C", "theta1 - theta2^3"},
                  {"mode", "coarea"}};
  CHECK(std::holds_alternative<fidcurve::ConditionPrior>(
      fidcurve::parse_config(doc).prior));
  doc["prior"]["mode"] = "as_paper";
  CHECK(std::holds_alternative<fidcurve::ConditionPrior>(
      fidcurve::parse_config(doc).prior));
}

TEST_CASE("rejections name the offending field") {
  CHECK(reject_path(Json::array()) == "config");
  CHECK(reject_path(Json(42)) == "config");

  Json doc = base_doc();
  doc.erase("curve");
  CHECK(reject_path(doc) == "curve");

  doc = base_doc();
  doc["curve"].erase("mu1");
  CHECK(reject_path(doc) == "curve.mu1");

  doc = base_doc();
  doc["curve"]["mu1"] = 7;
  CHECK(reject_path(doc) == "curve.mu1");

  doc = base_doc();
  doc["curve"]["mu1"] = "t +* 2";
  CHECK(reject_path(doc) == "curve.mu1");

  doc = base_doc();
  doc["curve"]["mu2"] = "u";
  CHECK(reject_path(doc) == "curve.mu2");

  doc = base_doc();
  doc["curve"].erase("t_min");
  CHECK(reject_path(doc) == "curve.t_min");

  doc = base_doc();
  doc["curve"]["t_min"] = 2.0;
  doc["curve"]["t_max"] = -2.0;
  CHECK(reject_path(doc) == "curve.t_min");

  doc = base_doc();
  doc["curve"]["t_min"] = "low";
  CHECK(reject_path(doc) == "curve.t_min");

  doc = base_doc();
  doc.erase("noise");
  CHECK(reject_path(doc) == "noise");

  doc = base_doc();
  doc["noise"]["cov"] = {{1.0, 0.0}};
  CHECK(reject_path(doc) == "noise.cov");

  doc = base_doc();
  doc["noise"]["cov"] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  CHECK(reject_path(doc) == "noise.cov");

  doc = base_doc();
  doc["noise"]["cov"] = {{1.0, 0.5}, {0.4, 1.0}};
  CHECK(reject_path(doc) == "noise.cov");

  doc = base_doc();
  doc["noise"]["cov"] = {{1.0, 2.0}, {2.0, 1.0}};
  CHECK(reject_path(doc) == "noise.cov");

  doc = base_doc();
  doc.erase("observation");
  CHECK(reject_path(doc) == "observation");

  doc = base_doc();
  doc["observation"] = {1.0, 2.0, 3.0};
  CHECK(reject_path(doc) == "observation");

  doc = base_doc();
  doc["prior"] = {{"type", "banana"}};
  CHECK(reject_path(doc) == "prior.type");

  doc = base_doc();
  doc["prior"] = {{"type", "linear"}};
  CHECK(reject_path(doc) == "prior.c");

  doc = base_doc();
  doc["prior"] = {{"type", "linear"}, {"c", {1.0, 2.0, 3.0}}};
  CHECK(reject_path(doc) == "prior.c");

  doc = base_doc();
  doc["prior"] = {{"type", "shift"}, {"d", {0.0, 0.0}}};
  CHECK(reject_path(doc) == "prior");

  doc = base_doc();
  doc["prior"] = {{"type", "condition"}, {"mode", "coarea"}};
  CHECK(reject_path(doc) == "prior.C");

  doc = base_doc();
  doc["prior"] = {{"type", "condition"}, {"C", "theta2"}};
  CHECK(reject_path(doc) == "prior.mode");

  doc = base_doc();
  doc["prior"] = {{"type", "condition"}, {"C", "theta2"}, {"mode", "exact"}};
  CHECK(reject_path(doc) == "prior.mode");

  doc = base_doc();
  doc["prior"] = {{"type", "condition"}, {"C", "x - 1"}, {"mode", "coarea"}};
  CHECK(reject_path(doc) == "prior.C");

  doc = base_doc();
  doc["output"].erase("grid_points");
  CHECK(reject_path(doc) == "output.grid_points");

  doc = base_doc();
  doc["output"]["grid_points"] = 1;
  CHECK(reject_path(doc) == "output.grid_points");

  doc = base_doc();
  doc["output"]["grid_points"] = 10.5;
  CHECK(reject_path(doc) == "output.grid_points");

  doc = base_doc();
  doc["output"]["quantiles"] = "median";
  CHECK(reject_path(doc) == "output.quantiles");

  doc = base_doc();
  doc["output"]["quantiles"] = {0.5, 0.0};
  CHECK(reject_path(doc) == "output.quantiles");

  doc = base_doc();
  doc["output"]["quantiles"] = {1.5};
  CHECK(reject_path(doc) == "output.quantiles");

  doc = base_doc();
  doc["output"]["n_samples"] = -5;
  CHECK(reject_path(doc) == "output.n_samples");

  doc = base_doc();
  doc["output"].erase("seed");
  CHECK(reject_path(doc) == "output.seed");

  doc = base_doc();
  doc["output"]["tolerance"] = 1e-15;
  CHECK(reject_path(doc) == "output.tolerance");

  doc = base_doc();
  doc["output"]["tolerance"] = 0.01;
  CHECK(reject_path(doc) == "output.tolerance");

  doc = base_doc();
  doc["oracle"] = {{"kind", "cube"}, {"epsilon", 0.01}, {"n_proposed", 10}, {"seed", 1}};
  CHECK(reject_path(doc) == "oracle.kind");

  doc = base_doc();
  doc["oracle"] = {{"kind", "slab"}, {"epsilon", 0.01}, {"n_proposed", 10}, {"seed", 1}};
  CHECK(reject_path(doc) == "oracle.d");

  doc = base_doc();
  doc["oracle"] = {{"kind", "slab"},
                   {"d", {0.0, 0.0}},
                   {"epsilon", 0.01},
                   {"n_proposed", 10},
                   {"seed", 1}};
  CHECK(reject_path(doc) == "oracle.d");

  doc = base_doc();
  doc["oracle"] = {{"kind", "tube"}, {"epsilon", 0.0}, {"n_proposed", 10}, {"seed", 1}};
  CHECK(reject_path(doc) == "oracle.epsilon");

  doc = base_doc();
  doc["oracle"] = {{"kind", "tube"}, {"epsilon", 0.01}, {"n_proposed", 0}, {"seed", 1}};
  CHECK(reject_path(doc) == "oracle.n_proposed");

  doc = base_doc();
  doc["oracle"] = {{"kind", "tube"}, {"epsilon", 0.01}, {"n_proposed", 10}};
  CHECK(reject_path(doc) == "oracle.seed");
}

TEST_CASE("tolerance is optional with a validated range") {
  Json doc = base_doc();
  CHECK(fidcurve::parse_config(doc).output.tolerance == 1e-10);
  doc["output"]["tolerance"] = 1e-8;
  CHECK(fidcurve::parse_config(doc).output.tolerance == 1e-8);
  doc["output"]["tolerance"] = 1e-12;
  CHECK(fidcurve::parse_config(doc).output.tolerance == 1e-12);
  doc["output"]["tolerance"] = 1e-3;
  CHECK(fidcurve::parse_config(doc).output.tolerance == 1e-3);
}

TEST_CASE("unknown keys are tolerated") {
  Json doc = base_doc();
  doc["notes"] = "anything";
  doc["curve"]["comment"] = "cubic";
  doc["output"]["extra"] = 5;
  const auto pc = fidcurve::parse_config(doc);
  CHECK(pc.output.grid_points == 101);
  CHECK(pc.echo.contains("notes"));
}

TEST_CASE("a tube oracle needs no direction") {
  Json doc = base_doc();
  doc["oracle"] = {{"kind", "tube"}, {"epsilon", 0.05}, {"n_proposed", 500}, {"seed", 3}};
  const auto pc = fidcurve::parse_config(doc);
  REQUIRE(pc.oracle.has_value());
  CHECK(pc.oracle->kind == fidcurve::OracleKind::Tube);
  CHECK(pc.oracle->epsilon == 0.05);
}

TEST_CASE("file loading reports unreadable and malformed input") {
  testutil::TempDir dir;
  try {
    fidcurve::load_config((dir.path / "absent.json").string());
    FAIL("missing file accepted");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "config");
    CHECK(std::string(e.what()).find("cannot read") != std::string::npos);
  }
  const auto bad = dir.path / "bad.json";
  testutil::write_file(bad, "{ not json ]");
  try {
    fidcurve::load_config(bad.string());
    FAIL("malformed file accepted");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "config");
    CHECK(std::string(e.what()).find("invalid JSON") != std::string::npos);
  }
  const auto good = dir.path / "good.json";
  testutil::write_file(good, base_doc().dump(2));
  const auto pc = fidcurve::load_config(good.string());
  CHECK(pc.output.seed == 7);
}
