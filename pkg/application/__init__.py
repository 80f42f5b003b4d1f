# Application package 
