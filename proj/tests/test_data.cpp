#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "vitl/data.hpp"

using namespace vitl;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / ("vitl_test_data_" + std::to_string(std::random_device{}()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

// n identities, labels neutral/happy/sad at fixed coordinates, landmarks encode (i, j).
TrajectoryDataset small(Index n, Index d = 2) {
    const std::vector<std::pair<std::string, Eigen::Vector2d>> emotions = {
        {"neutral", {0.0, 0.0}}, {"happy", {1.0, 0.0}}, {"sad", {-1.0, 0.0}}};
    TrajectoryDataset data;
    for (Index i = 0; i < n; ++i) {
        IdentityRecord rec;
        rec.id = "p" + std::to_string(i);
        for (Index j = 0; j < 3; ++j) {
            Observation obs;
            obs.emotion = {emotions[j].second, emotions[j].first};
            obs.landmarks = Eigen::VectorXd::Constant(d, 10.0 * i + j);
            rec.observations.push_back(obs);
        }
        data.identities.push_back(rec);
    }
    return data;
}

}  // namespace

TEST_CASE("dataset round trip through text") {
    TrajectoryDataset data = small(3);
    data.identities[1].observations[2].landmarks(0) = 0.1 + 0.2;  // needs all 17 digits
    const fs::path p = scratch() / "round.csv";
    save_dataset(data, p);
    const TrajectoryDataset back = load_dataset(p);
    REQUIRE(back.n() == 3);
    CHECK(back.m() == 3);
    CHECK(back.d() == 2);
    CHECK(back.p() == 2);
    for (Index i = 0; i < 3; ++i) {
        CHECK(back.identities[i].id == data.identities[i].id);
        for (Index j = 0; j < 3; ++j) {
            CHECK(back.identities[i].observations[j].landmarks == data.identities[i].observations[j].landmarks);
            CHECK(back.identities[i].observations[j].emotion.label == data.identities[i].observations[j].emotion.label);
        }
    }
    CHECK(!fs::exists(scratch() / "round.csv.tmp"));
}

TEST_CASE("loading resolves labels, tabs and comments") {
    const auto p = write("tabbed.tsv",
                         "# comment line\n"
                         "identity_id\temotion_label\tx1\ty1\n"
                         "a\tneutral\t1\t2\n"
                         "\n"
                         "a\thappy\t+3\t4e0\n"
                         "b\thappy\t5\t6\n"
                         "b\tneutral\t7\t8\n");
    const EmotionEmbedding emb = EmotionEmbedding::builtin();
    const TrajectoryDataset data = load_dataset(p, &emb);
    REQUIRE(data.n() == 2);
    CHECK(data.p() == 2);
    // labels ordered by first appearance, so b is reordered to (neutral, happy)
    CHECK(data.identities[1].observations[0].emotion.label == "neutral");
    CHECK(data.identities[1].observations[0].landmarks(0) == 7.0);
    CHECK(data.identities[0].observations[1].landmarks(0) == 3.0);
    CHECK(data.identities[0].observations[0].emotion.coords.isZero(0.0));
    CHECK(data.identities[0].observations[1].emotion.coords.norm() == doctest::Approx(1.0));
}

TEST_CASE("loader errors") {
    CHECK_THROWS_AS(load_dataset(scratch() / "missing.csv"), DataError);

    const auto short_row = write("short.csv", "identity_id,emotion_label,theta_0,l_0\na,neutral,0,1\na,happy,1\n");
    try {
        load_dataset(short_row);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("short.csv:3") != std::string::npos);
    }

    const auto bad_number = write("bad.csv", "identity_id,emotion_label,theta_0,l_0\na,neutral,0,abc\n");
    CHECK_THROWS_AS(load_dataset(bad_number), DataError);

    const auto dup = write("dup.csv", "identity_id,emotion_label,theta_0,l_0\na,neutral,0,1\na,neutral,0,2\n");
    CHECK_THROWS_AS(load_dataset(dup), DataError);

    const auto ragged = write("ragged.csv",
                              "identity_id,emotion_label,theta_0,l_0\na,neutral,0,1\na,happy,1,1\nb,neutral,0,1\n");
    CHECK_THROWS_AS(load_dataset(ragged), DataError);

    const auto no_theta = write("notheta.csv", "identity_id,emotion_label,l_0\na,neutral,1\n");
    CHECK_THROWS_AS(load_dataset(no_theta), ConfigError);

    const auto unknown = write("unknown.csv", "identity_id,emotion_label,l_0\na,bored,1\n");
    const EmotionEmbedding emb = EmotionEmbedding::builtin();
    CHECK_THROWS_AS(load_dataset(unknown, &emb), ConfigError);
}

TEST_CASE("single and joint triplets") {
    const TrajectoryDataset data = small(4);
    const TripletDataset single = build_single(data, EmotionRef{std::string("neutral")});
    CHECK(single.t() == 4);
    CHECK(single.m == 3);
    CHECK(single.fully_observed());
    CHECK(single.shared_grid());
    CHECK(single.inputs(2, 0) == 20.0);
    CHECK(single.outputs(3 * 2 + 1, 0) == 21.0);
    CHECK_THROWS_AS(build_single(data, EmotionRef{std::string("angry")}), DataError);

    EmotionPoint by_coords{Eigen::Vector2d(1.0, 0.0), ""};
    CHECK(build_single(data, by_coords).inputs(1, 0) == 11.0);

    const TripletDataset joint = build_joint(data);
    CHECK(joint.t() == 12);
    CHECK(joint.inputs(5, 0) == 12.0);  // identity 1, input emotion 2
    CHECK(joint.source_identity[5] == 1);
    CHECK(joint.input_emotion[5] == 2);
    CHECK(joint.outputs.middleRows(3 * 5, 3) == single.outputs.middleRows(3 * 1, 3));
}

TEST_CASE("masks keep an exact share and compose") {
    const TrajectoryDataset data = small(10);
    const TrajectoryDataset masked = apply_mask(data, 0.6, 7);
    CHECK(masked.n_observed() == 18);
    CHECK(apply_mask(data, 0.6, 7).mask.value().isApprox(masked.mask.value()));
    CHECK(apply_mask(data, 0.0, 7).n_observed() == 0);
    CHECK(apply_mask(data, 1.0, 7).n_observed() == 30);

    const TrajectoryDataset twice = apply_mask(masked, 0.5, 9);
    CHECK(twice.n_observed() <= 15);
    CHECK(((twice.mask->cast<int>() - masked.mask->cast<int>()) <= 0).all());

    // single mode keeps the input, joint mode drops triplets with a masked input
    const TripletDataset single = build_single(masked, EmotionRef{std::string("neutral")});
    CHECK(single.t() == 10);
    CHECK(single.n_observed() == 18);
    CHECK(build_joint(masked).t() == 18);

    CHECK_THROWS_AS(apply_mask(data, 1.5, 1), InvalidArgument);
}

TEST_CASE("identity subsets carry their mask rows") {
    const TrajectoryDataset masked = apply_mask(small(5), 0.5, 3);
    const std::vector<Index> ids = {4, 1};
    const TrajectoryDataset sub = subset_identities(masked, ids);
    CHECK(sub.n() == 2);
    CHECK(sub.identities[0].id == "p4");
    CHECK((sub.mask->row(1) == masked.mask->row(1)).all());
    const std::vector<Index> bad = {7};
    CHECK_THROWS_AS(subset_identities(masked, bad), InvalidArgument);
}

TEST_CASE("emotion embedding") {
    const EmotionEmbedding builtin = EmotionEmbedding::builtin();
    CHECK(builtin.contains("surprised"));
    CHECK(builtin.lookup("neutral").coords.isZero(0.0));
    CHECK_THROWS_AS(builtin.lookup("bored"), ConfigError);

    const auto with_header = write("emb.csv", "label,valence,arousal\nhappy,3,4\nneutral,5,5\n");
    const EmotionEmbedding loaded = EmotionEmbedding::load(with_header);
    CHECK(loaded.lookup("happy").coords(0) == doctest::Approx(0.6));
    CHECK(loaded.lookup("neutral").coords.isZero(0.0));
    const auto points = default_emotion_embedding({"neutral", "happy"}, loaded);
    CHECK(points[1].label == "happy");

    const auto headerless = write("emb2.csv", "happy,1,0\nsad,-1,0\n");
    CHECK(EmotionEmbedding::load(headerless).contains("sad"));
    const auto zero = write("emb3.csv", "happy,0,0\n");
    CHECK_THROWS_AS(EmotionEmbedding::load(zero), ConfigError);
    CHECK_THROWS_AS(EmotionEmbedding::load(scratch() / "nope.csv"), ConfigError);
}
