// figment::Jail fixes the closure signature.
#![allow(clippy::result_large_err)]

use std::path::Path;

use feedrank_core::ProfileConfig;
use feedrank_service::ServiceConfig;
use figment::Jail;

#[test]
fn defaults_need_no_file() {
    Jail::expect_with(|_| {
        let c = ServiceConfig::load(None).unwrap();
        assert_eq!(c, ServiceConfig::default());
        assert_eq!(c.ranking.page_size, 14);
        assert_eq!(c.server.port, 8080);
        Ok(())
    });
}

#[test]
fn file_then_environment() {
    Jail::expect_with(|jail| {
        jail.create_file(
            "feedrank.toml",
            r#"
            [server]
            port = 9001
            [ranking]
            page_size = 10
            [profile]
            a = 0.8
            b = 0.2
            "#,
        )?;
        jail.set_env("FEEDRANK_SERVER__PORT", "9100");
        jail.set_env("FEEDRANK_STORAGE__DATA_DIR", "/tmp/elsewhere");
        let c = ServiceConfig::load(Some(Path::new("feedrank.toml"))).unwrap();
        assert_eq!(c.server.port, 9100);
        assert_eq!(c.ranking.page_size, 10);
        assert_eq!(c.storage.data_dir, Path::new("/tmp/elsewhere"));
        assert_eq!(c.profile, ProfileConfig::new(0.8, 0.2).unwrap());
        assert_eq!(c.feeds.poll_interval_secs, 900);
        Ok(())
    });
}

#[test]
fn invalid_settings_are_refused() {
    Jail::expect_with(|jail| {
        assert!(ServiceConfig::load(Some(Path::new("missing.toml"))).is_err());

        jail.create_file("zero.toml", "[ranking]\npage_size = 0\n")?;
        let err = ServiceConfig::load(Some(Path::new("zero.toml"))).unwrap_err();
        assert!(err.to_string().contains("page_size"), "{err}");

        jail.create_file("ab.toml", "[profile]\na = 0.9\nb = 0.9\n")?;
        assert!(ServiceConfig::load(Some(Path::new("ab.toml"))).is_err());

        jail.create_file("typo.toml", "[ranking]\npage_size = \"many\"\n")?;
        assert!(ServiceConfig::load(Some(Path::new("typo.toml"))).is_err());
        Ok(())
    });
}

#[test]
fn stopword_file_replaces_the_builtin_list() {
    Jail::expect_with(|jail| {
        jail.create_file("stop.txt", "banana\n")?;
        jail.set_env("FEEDRANK_TEXT__STOPWORDS", "stop.txt");
        let c = ServiceConfig::load(None).unwrap();
        let tok = c.tokenizer().unwrap();
        assert_eq!(tok.tokenize("The banana split").as_slice(), ["the", "split"]);
        Ok(())
    });
}

#[test]
fn example_file_spells_out_the_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../feedrank.example.toml");
    Jail::expect_with(|_| {
        assert_eq!(
            ServiceConfig::load(Some(Path::new(path))).unwrap(),
            ServiceConfig::default()
        );
        Ok(())
    });
}
