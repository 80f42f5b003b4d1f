# Domain package 
