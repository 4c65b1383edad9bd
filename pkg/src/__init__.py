# Mixture NPMLE toolkit source package
