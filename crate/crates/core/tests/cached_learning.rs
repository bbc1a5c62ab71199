use rand::rngs::StdRng;
use rand::SeedableRng;

use gj_core::cache::FactorCache;
use gj_core::fixtures::{random_instance, RandomParams, Shape};
use gj_core::gfjs::store;
use gj_core::pipeline::{learn, learn_cached, summarize, summarize_learned, Catalog};
use gj_core::query::load_query;

#[test]
fn cached_potentials_equal_direct_learning() {
    let mut rng = StdRng::seed_from_u64(31);
    for shape in [Shape::Chain(3), Shape::Star(3), Shape::Triangle] {
        let inst = random_instance(shape, RandomParams::default(), &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let query = load_query(inst.write_to(dir.path()).unwrap()).unwrap();
        let catalog = Catalog::load(&query, true).unwrap();
        let direct = learn(&query, &catalog).unwrap();

        let cache = FactorCache::new(dir.path().join("cache"));
        let first = learn_cached(&query, &cache, true).unwrap();
        assert_eq!(first.hits, 0);
        let second = learn_cached(&query, &cache, true).unwrap();
        assert_eq!(second.hits, query.tables.len());

        for cached in [&first, &second] {
            assert_eq!(*cached.learned.domain, *direct.domain);
            assert_eq!(cached.learned.factors, direct.factors);
            assert_eq!(cached.table_sizes, inst.table_sizes().unwrap());
        }

        // Same summary bytes either way.
        let a = summarize(&query, &catalog).unwrap();
        let b = summarize_learned(
            &query,
            second.learned,
            &second.table_sizes,
            Default::default(),
        )
        .unwrap();
        let (da, db) = (dir.path().join("a"), dir.path().join("b"));
        assert_eq!(store(&a.gfjs, &da).unwrap(), store(&b.gfjs, &db).unwrap());
        for entry in std::fs::read_dir(&da).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                std::fs::read(da.join(&name)).unwrap(),
                std::fs::read(db.join(&name)).unwrap()
            );
        }
    }
}

#[test]
fn edited_source_invalidates_the_entry() {
    let mut rng = StdRng::seed_from_u64(32);
    let inst = random_instance(Shape::Chain(2), RandomParams::default(), &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let query = load_query(inst.write_to(dir.path()).unwrap()).unwrap();
    let cache = FactorCache::new(dir.path().join("cache"));
    learn_cached(&query, &cache, true).unwrap();

    let path = &query.tables[0].path;
    let mut text = std::fs::read_to_string(path).unwrap();
    text.push_str("fresh_x,fresh_y\n");
    std::fs::write(path, text).unwrap();

    let again = learn_cached(&query, &cache, true).unwrap();
    assert_eq!(again.hits, query.tables.len() - 1);
    let direct = learn(&query, &Catalog::load(&query, true).unwrap()).unwrap();
    assert_eq!(again.learned.factors, direct.factors);
}
