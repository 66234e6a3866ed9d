from hypothesis import settings

settings.register_profile("repo", derandomize=True, max_examples=60, deadline=None)
settings.load_profile("repo")
