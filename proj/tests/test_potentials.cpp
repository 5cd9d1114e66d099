#include <mixed_gpe/fem_core.hpp>
#include <mixed_gpe/mesh.hpp>
#include <mixed_gpe/potentials.hpp>
#include <mixed_gpe/quadrature.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace mixed_gpe;

TEST(Disorder, DefaultField) {
  const CellGrid g = disorder_field(1.0 / 64.0, 1.0, 1);
  EXPECT_EQ(g.nx, 128);
  EXPECT_EQ(g.ny, 128);
  EXPECT_DOUBLE_EQ(disorder_high_value(1.0 / 64.0, 1.0), 1025.0);
  std::size_t high = 0;
  for (double v : g.values) {
    EXPECT_TRUE(v == 1.0 || v == 1025.0);
    high += v == 1025.0;
  }
  const double fraction = static_cast<double>(high) / g.values.size();
  EXPECT_GT(fraction, 0.45);
  EXPECT_LT(fraction, 0.55);
}

TEST(Disorder, SeedDeterminism) {
  const auto a = disorder_field(1.0 / 16.0, 1.0, 42);
  const auto b = disorder_field(1.0 / 16.0, 1.0, 42);
  const auto c = disorder_field(1.0 / 16.0, 1.0, 43);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
}

TEST(Disorder, RejectsNonDyadicCells) {
  EXPECT_THROW(disorder_cells_per_axis(0.3, 1.0), InvalidConfiguration);
  EXPECT_THROW(disorder_cells_per_axis(2.0 / 3.0, 1.0), InvalidConfiguration);
  EXPECT_THROW(disorder_cells_per_axis(0.0, 1.0), InvalidConfiguration);
  EXPECT_EQ(disorder_cells_per_axis(0.5, 1.0), 4);
}

TEST(Disorder, ProjectionLooksUpCells) {
  const DisorderPotential d{1.0 / 8.0, 1.0, 9};
  const CellGrid g = disorder_field(d.epsilon, d.half_width, d.seed);
  auto mesh = red_refine(friedrichs_keller(1.0, 16, false));
  const Vector v = l2_project_potential(*mesh, {d, 1.0});
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const Point c = mesh->barycenter(t);
    const int i = static_cast<int>((c[0] + 1.0) / d.epsilon);
    const int j = static_cast<int>((c[1] + 1.0) / d.epsilon);
    EXPECT_EQ(v[t], g.at(i, j));
  }
}

TEST(Disorder, MisalignedMeshIsRejected) {
  auto mesh = friedrichs_keller(1.0, 64, false);
  EXPECT_THROW(l2_project_potential(*mesh, {DisorderPotential{1.0 / 64.0, 1.0, 1}, 1.0}), AlignmentError);
}

TEST(CellGrids, HarmonicCellMeans) {
  const CellGrid g = harmonic_cell_grid(8.0, 4);
  // cells of side 4; mean of |x|^2/2 over [0,4]^2 is 16/3
  EXPECT_DOUBLE_EQ(g.at(2, 2), 16.0 / 3.0);
  EXPECT_DOUBLE_EQ(g.at(0, 0), g.at(3, 3));
  auto mesh = red_refine(friedrichs_keller(8.0, 2, true), 2);
  const Vector v = l2_project_potential(*mesh, {g, 0.0});
  const Vector exact = l2_project_potential(*mesh, {HarmonicPotential{}, 0.0});
  // per cell, the area-weighted mean of element values equals the cell value
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      double s = 0.0, a = 0.0;
      for (int t = 0; t < mesh->num_triangles(); ++t) {
        const auto cell = containing_cell(*mesh, g, t);
        if (cell[0] == i && cell[1] == j) {
          s += exact[t] * mesh->area(t);
          a += mesh->area(t);
          EXPECT_EQ(v[t], g.at(i, j));
        }
      }
      EXPECT_NEAR(s / a, g.at(i, j), 1e-12);
    }
}

TEST(CellGrids, TextRoundTrip) {
  const CellGrid g = disorder_field(0.25, 1.0, 3);
  std::stringstream ss;
  write_cell_grid(ss, g);
  const CellGrid back = read_cell_grid(ss);
  EXPECT_EQ(back.nx, g.nx);
  EXPECT_EQ(back.values, g.values);
  std::stringstream bad("2 2 1 1\n1 2 3");
  EXPECT_THROW(read_cell_grid(bad), InvalidConfiguration);
  std::stringstream untiled("2 2 1 0.7\n1 2 3 4");
  EXPECT_THROW(read_cell_grid(untiled), InvalidConfiguration);
}

TEST(Presets, AllNonNegative) {
  auto mesh = red_refine(friedrichs_keller(8.0, 2, true), 2);
  EXPECT_GE(l2_project_potential(*mesh, {HarmonicPotential{}, 0.0}).minCoeff(), 0.0);
  EXPECT_EQ(l2_project_potential(*mesh, {ConstantPotential{1.0}, 0.0}).minCoeff(), 1.0);
  const auto g = disorder_field(1.0 / 64.0, 1.0, 5);
  EXPECT_GE(*std::min_element(g.values.begin(), g.values.end()), 1.0);
  EXPECT_EQ(potential_name({DisorderPotential{}, 1.0}), "disorder");
}
