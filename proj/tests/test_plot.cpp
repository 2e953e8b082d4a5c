#include "support.hpp"

#include "sgw/error.hpp"
#include "sgw/plot.hpp"

#include <doctest.h>

#include <cmath>

using namespace sgw;

namespace {

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("NMSE chart") {
  const auto dir = sgw::test::temp_dir("plot-nmse");
  sgw::test::write_file(dir / "nmse.csv", "k,nmse\n1,1\n2,0.5\n3,0.01\n");
  const plot::LineChart chart = plot::nmse_chart(dir / "nmse.csv");
  REQUIRE(chart.series.size() == 1);
  CHECK(chart.log_y);
  CHECK(chart.series[0].x == std::vector<double>{1, 2, 3});
  CHECK(chart.series[0].y == std::vector<double>{1, 0.5, 0.01});
  const std::string svg = plot::render_svg(chart);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "class=\"series\"") == 1);
}

TEST_CASE("GSGW chart has one series per shape") {
  const auto dir = sgw::test::temp_dir("plot-gsgw");
  sgw::test::write_file(dir / "g.csv", "id,label,g1,g2,g3\na,x,1,2,3\nb,y,3,2,1\n");
  const plot::LineChart chart = plot::gsgw_chart(dir / "g.csv");
  REQUIRE(chart.series.size() == 2);
  CHECK(chart.series[1].y == std::vector<double>{3, 2, 1});
  CHECK(count(plot::render_svg(chart), "class=\"series\"") == 2);
}

TEST_CASE("sweep heatmap") {
  const auto dir = sgw::test::temp_dir("plot-sweep");
  sgw::test::write_file(dir / "s.csv",
                        "R,k,bone,side,wilks_lambda,manova_p,permutation_p,pca_dims,error\n"
                        "1,10,b,left,0.5,0.01,0.02,3,\n"
                        "1,31,b,left,0.4,0.02,0.03,3,\n"
                        "5,10,b,left,0.3,0.03,0.04,3,\n"
                        "5,31,b,left,,,,,failed\n"
                        "1,10,c,right,0.9,0.9,0.9,3,\n");
  const plot::Heatmap map = plot::sweep_heatmap(dir / "s.csv", "manova_p");
  REQUIRE(map.rows.size() == 2);
  REQUIRE(map.cols.size() == 2);
  CHECK(map.cells[0][1] == 0.02);
  CHECK(std::isnan(map.cells[1][1]));
  const std::string svg = plot::render_svg(map);
  CHECK(count(svg, "class=\"cell\"") == 4);

  const plot::Heatmap other = plot::sweep_heatmap(dir / "s.csv", "wilks_lambda", "c", "right");
  REQUIRE(other.rows.size() == 1);
  CHECK(other.cells[0][0] == 0.9);
}

TEST_CASE("malformed inputs raise ParseError") {
  const auto dir = sgw::test::temp_dir("plot-bad");
  sgw::test::write_file(dir / "nocol.csv", "k,error\n1,1\n");
  CHECK_THROWS_AS(plot::nmse_chart(dir / "nocol.csv"), ParseError);
  sgw::test::write_file(dir / "norows.csv", "k,nmse\n");
  CHECK_THROWS_AS(plot::nmse_chart(dir / "norows.csv"), ParseError);
  sgw::test::write_file(dir / "text.csv", "k,nmse\n1,abc\n");
  CHECK_THROWS_AS(plot::nmse_chart(dir / "text.csv"), ParseError);
  sgw::test::write_file(dir / "sweep.csv", "R,k,bone,side,manova_p\n1,10,b,left,0.1\n");
  CHECK_THROWS_AS(plot::sweep_heatmap(dir / "sweep.csv", "no_such_column"), ParseError);
}
